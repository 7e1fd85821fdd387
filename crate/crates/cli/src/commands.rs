use std::fs;
use std::path::Path;

use clap::ValueEnum;
use muench_core::algebra::{check_gl_laws, Element, Frame};
use muench_core::muench::{
    build_imc, explore_closure_failures, finite_level_boxbox, reflexive_induction_check,
    soundness_suite, stabilize, transfinite_reflexive_induction_check, LevelledPredicate, Mode,
};
use muench_core::ordinals::Ordinal;
use muench_core::proofkit::{
    check_proof, derive_blacksquare_lob, derive_box_disjunction, derive_cons_absorption,
    derive_cons_provable, parse_proof, print_proof,
};
use muench_core::syntax::{parse_formula, print_formula};
use muench_core::uniformpp::{
    certificate_equivalence, normalization_checks, uprov_property_suite, UniformContext,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{emit, ConfigEcho, Failure, RunConfig, SourcedFrame};

/// Tables are written out in full up to this many worlds, as digests above.
const FULL_TABLE_WORLDS: usize = 4;
const PADDING: u64 = 10;

pub fn parse(path: Option<&Path>, formula: Option<&str>) -> Result<(), Failure> {
    match (path, formula) {
        (_, Some(text)) => {
            let f = parse_formula(text).map_err(Failure::config)?;
            println!("{}", print_formula(&f));
            Ok(())
        }
        (Some(path), None) => {
            let text = read(path)?;
            let p = parse_proof(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            print!("{}", print_proof(&p));
            Ok(())
        }
        (None, None) => Err(Failure::Config("give a proof file or --formula".into())),
    }
}

pub fn check(path: &Path) -> Result<(), Failure> {
    let text = read(path)?;
    let p = parse_proof(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    check_proof(&p).map_err(|e| Failure::Rejected(format!("{}: {e}", path.display())))?;
    let concl = p.conclusion().map(print_formula).unwrap_or_default();
    println!("ok: {} lines, system {}, proves {concl}", p.len(), p.system);
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Lemma {
    ConsProvable,
    ConsAbsorption,
    BoxDisjunction,
    BlacksquareLob,
}

pub struct DeriveArgs<'a> {
    pub lemma: Lemma,
    pub alpha: &'a str,
    pub beta: &'a str,
    pub phi: &'a str,
    pub psi: &'a str,
    pub out: Option<&'a Path>,
}

pub fn derive(a: &DeriveArgs<'_>) -> Result<(), Failure> {
    let ord = |s: &str| Ordinal::parse(s).map_err(Failure::config);
    let form = |s: &str| parse_formula(s).map_err(Failure::config);
    let proof = match a.lemma {
        Lemma::ConsProvable => derive_cons_provable(&ord(a.alpha)?, &ord(a.beta)?),
        Lemma::ConsAbsorption => derive_cons_absorption(&ord(a.alpha)?, &ord(a.beta)?, &form(a.phi)?),
        Lemma::BoxDisjunction => {
            derive_box_disjunction(&ord(a.alpha)?, &ord(a.beta)?, &form(a.phi)?, &form(a.psi)?)
        }
        Lemma::BlacksquareLob => derive_blacksquare_lob(&form(a.phi)?),
    }
    .map_err(Failure::config)?;
    let text = print_proof(&proof);
    match a.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Config(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

/// Runs `job` over every frame on the worker pool, keeping input order.
fn per_frame<T, F>(cfg: &RunConfig, job: F) -> Result<Vec<T>, Failure>
where
    T: Send,
    F: Fn(&SourcedFrame) -> Result<T, Failure> + Sync,
{
    let threads = std::env::var("MUENCH_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(Failure::config)?;
    let results: Vec<Result<T, Failure>> = pool.install(|| cfg.frames.par_iter().map(&job).collect());
    results.into_iter().collect()
}

#[derive(Serialize)]
struct LevelOut {
    level: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<Vec<u16>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    digest: Option<String>,
    consistency: u16,
}

#[derive(Serialize)]
struct EvalFrame {
    source: String,
    worlds: usize,
    edges: Vec<[usize; 2]>,
    saturated: bool,
    stabilization: Option<String>,
    levels: Vec<LevelOut>,
}

#[derive(Serialize)]
struct EvalReport {
    command: &'static str,
    config: ConfigEcho,
    frames: Vec<EvalFrame>,
}

fn digest(table: &[u16]) -> String {
    let mut h = Sha256::new();
    for v in table {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn eval(cfg: &RunConfig) -> Result<(), Failure> {
    let frames = per_frame(cfg, |sf| {
        let p = cfg.predicate(&sf.frame, cfg.mode)?;
        let full = sf.frame.worlds() <= FULL_TABLE_WORLDS;
        let levels = (0..p.levels())
            .map(|z| LevelOut {
                level: p.grid().points()[z].to_string(),
                table: full.then(|| p.table(z).to_vec()),
                digest: (!full).then(|| digest(p.table(z))),
                consistency: p.consistency(z).bits(),
            })
            .collect();
        Ok(EvalFrame {
            source: sf.source.clone(),
            worlds: sf.frame.worlds(),
            edges: sf.frame.to_file().edges,
            saturated: p.is_saturated(),
            stabilization: stabilize(&p).map(|o| o.to_string()),
            levels,
        })
    })?;
    for f in &frames {
        eprintln!(
            "{}: {} levels, stabilizes at {}",
            f.source,
            f.levels.len(),
            f.stabilization.as_deref().unwrap_or("none")
        );
    }
    emit(
        &EvalReport {
            command: "eval",
            config: cfg.echo(),
            frames,
        },
        cfg.out.as_deref(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteName {
    VectorSoundness,
    SingleAsserted,
    SingleExploratory,
    ReflexiveInduction,
    BoxboxEquivalence,
    ImcUniqueness,
    UniformPp,
    GlLaws,
}

impl SuiteName {
    fn label(self) -> String {
        self.to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default()
    }

    fn exploratory(self) -> bool {
        self == SuiteName::SingleExploratory
    }
}

#[derive(Serialize)]
struct FrameOutcome {
    source: String,
    worlds: usize,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
    detail: Value,
}

#[derive(Serialize)]
struct SuiteOut {
    suite: String,
    exploratory: bool,
    config: ConfigEcho,
    passed: bool,
    frames: Vec<FrameOutcome>,
}

pub fn suite(name: SuiteName, cfg: &RunConfig) -> Result<(), Failure> {
    let frames = per_frame(cfg, |sf| run_suite(name, cfg, sf))?;
    let passed = name.exploratory() || frames.iter().all(|f| f.passed);
    let mut failed = 0;
    for f in &frames {
        match &f.failure {
            Some(why) if !name.exploratory() => {
                failed += 1;
                eprintln!("FAIL {}: {why}", f.source);
            }
            _ => {}
        }
    }
    eprintln!(
        "{}: {} frames, {} with asserted failures",
        name.label(),
        frames.len(),
        failed
    );
    emit(
        &SuiteOut {
            suite: name.label(),
            exploratory: name.exploratory(),
            config: cfg.echo(),
            passed,
            frames,
        },
        cfg.out.as_deref(),
    )?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Rejected(format!("{}: asserted checks failed", name.label())))
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(Failure::config)
}

fn outcome(sf: &SourcedFrame, failure: Option<String>, detail: Value) -> FrameOutcome {
    FrameOutcome {
        source: sf.source.clone(),
        worlds: sf.frame.worlds(),
        passed: failure.is_none(),
        failure,
        detail,
    }
}

fn run_suite(name: SuiteName, cfg: &RunConfig, sf: &SourcedFrame) -> Result<FrameOutcome, Failure> {
    let f = &sf.frame;
    match name {
        SuiteName::VectorSoundness | SuiteName::SingleAsserted => {
            let mode = if name == SuiteName::VectorSoundness {
                Mode::Vector
            } else {
                Mode::Single
            };
            let p = cfg.predicate(f, mode)?;
            let mut report = soundness_suite(&p, cfg.sampling(f, 0));
            if mode == Mode::Single {
                report.records.retain(|r| r.asserted);
            }
            let failure = report.asserted_failures().first().map(|r| {
                format!(
                    "{} at level {}{} witness x={:?} y={:?}",
                    r.law,
                    r.level,
                    r.lower_level.as_ref().map(|l| format!(" over {l}")).unwrap_or_default(),
                    r.witness_x,
                    r.witness_y
                )
            });
            let detail = json!({ "saturated": p.is_saturated(), "records": to_value(&report.records)? });
            Ok(outcome(sf, failure, detail))
        }
        SuiteName::SingleExploratory => {
            let p = cfg.predicate(f, Mode::Single)?;
            let mut report = soundness_suite(&p, cfg.sampling(f, 0));
            report.records.retain(|r| !r.asserted);
            let explore = explore_closure_failures(&p).map_err(Failure::config)?;
            let detail = json!({
                "records": to_value(&report.records)?,
                "findings": to_value(&explore.findings)?,
            });
            Ok(outcome(sf, None, detail))
        }
        SuiteName::ReflexiveInduction => reflexive_induction(cfg, sf),
        SuiteName::BoxboxEquivalence => {
            let p = cfg.predicate(f, Mode::Single)?;
            let mut compared = Vec::new();
            let mut failure = None;
            for (k, o) in p.grid().points().iter().enumerate() {
                if *o != Ordinal::finite(k as u64) {
                    break;
                }
                let naive = finite_level_boxbox(f, k, p.universe()).map_err(Failure::config)?;
                let equal = naive == p.table(k);
                if !equal && failure.is_none() {
                    failure = Some(format!("level {k}: tables differ"));
                }
                compared.push(json!({ "level": k, "equal": equal }));
            }
            Ok(outcome(sf, failure, json!({ "levels": compared })))
        }
        SuiteName::ImcUniqueness => {
            let u = cfg.universe(f)?;
            let report = build_imc(f, &cfg.grid, &u, true).map_err(Failure::config)?;
            let failure = if !report.all_verified() {
                Some("built class fails the recursion".to_string())
            } else if !report.all_unique() {
                Some("recursion has more than one solution".to_string())
            } else {
                None
            };
            Ok(outcome(sf, failure, to_value(&report)?))
        }
        SuiteName::UniformPp => {
            let p = cfg.predicate(f, Mode::Single)?;
            let ctx = UniformContext::new(&p).map_err(Failure::config)?;
            let sampling = cfg.sampling(f, 0);
            let eq = certificate_equivalence(&ctx, sampling).map_err(Failure::config)?;
            let norm = normalization_checks(&ctx, cfg.samples.min(2000), PADDING, cfg.seed)
                .map_err(Failure::config)?;
            let props = uprov_property_suite(&ctx, sampling, cfg.seed).map_err(Failure::config)?;
            let failure = if !eq.holds() {
                eq.example.clone()
            } else if !norm.holds() {
                Some("normalization failed".to_string())
            } else {
                props
                    .properties
                    .iter()
                    .find(|r| r.asserted && !r.tally.holds())
                    .map(|r| format!("{}: {}", r.property, r.tally.example.clone().unwrap_or_default()))
            };
            let detail = json!({
                "equivalence": to_value(&eq)?,
                "normalization": to_value(&norm)?,
                "properties": to_value(&props.properties)?,
            });
            Ok(outcome(sf, failure, detail))
        }
        SuiteName::GlLaws => {
            let report = check_gl_laws(f, cfg.sampling(f, 0));
            let failure = report
                .violations
                .first()
                .map(|v| format!("{} fails at x={} y={:?}", v.law, v.x, v.y));
            Ok(outcome(sf, failure, to_value(&report)?))
        }
    }
}

/// Random assignments, half of them built to satisfy the premise.
fn reflexive_induction(cfg: &RunConfig, sf: &SourcedFrame) -> Result<FrameOutcome, Failure> {
    let f = &sf.frame;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ frame_salt(f));
    let mut plain = (0u64, 0u64, 0u64);
    let mut transfinite = (0u64, 0u64, 0u64);
    let mut failure = None;
    for i in 0..cfg.samples {
        let phi = assignment(&mut rng, f, cfg.grid.len(), i % 2 == 0);
        for (tally, which) in [(&mut plain, "plain"), (&mut transfinite, "transfinite")] {
            let inst = if which == "plain" {
                reflexive_induction_check(f, &cfg.grid, &phi)
            } else {
                transfinite_reflexive_induction_check(f, &cfg.grid, &phi)
            }
            .map_err(Failure::config)?;
            tally.0 += 1;
            tally.1 += u64::from(inst.premise);
            if !inst.holds() {
                tally.2 += 1;
                if failure.is_none() {
                    let bits: Vec<u16> = phi.iter().map(|e| e.bits()).collect();
                    failure = Some(format!("{which} induction fails for {bits:?}"));
                }
            }
        }
    }
    let row = |t: (u64, u64, u64)| json!({ "instances": t.0, "premise_holds": t.1, "violations": t.2 });
    let detail = json!({ "plain": row(plain), "transfinite": row(transfinite) });
    Ok(outcome(sf, failure, detail))
}

fn assignment(rng: &mut ChaCha8Rng, f: &Frame, len: usize, fit_premise: bool) -> Vec<Element> {
    let size = f.algebra_size();
    let mut below = f.top();
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let noise = f.element(rng.gen_range(0..size) as u16).expect("inside the algebra");
        let v = if fit_premise {
            f.box_op(below) | noise
        } else {
            noise
        };
        below = below & v;
        out.push(v);
    }
    out
}

fn frame_salt(f: &Frame) -> u64 {
    (0..f.worlds()).fold(f.worlds() as u64, |h, w| {
        h.wrapping_mul(0x100000001b3) ^ u64::from(f.successors(w).bits())
    })
}

#[derive(Serialize)]
struct ExploreFrame {
    source: String,
    worlds: usize,
    findings: Value,
}

#[derive(Serialize)]
struct Totals {
    law: String,
    instances: u64,
    violations: u64,
}

#[derive(Serialize)]
struct ExploreOut {
    command: &'static str,
    config: ConfigEcho,
    totals: Vec<Totals>,
    frames: Vec<ExploreFrame>,
}

pub fn explore(cfg: &RunConfig) -> Result<(), Failure> {
    let reports = per_frame(cfg, |sf| {
        let p: LevelledPredicate = cfg.predicate(&sf.frame, Mode::Single)?;
        explore_closure_failures(&p)
            .map(|r| (sf.source.clone(), r))
            .map_err(Failure::config)
    })?;
    let mut totals: Vec<Totals> = Vec::new();
    let mut frames = Vec::new();
    for (source, r) in reports {
        for lf in &r.findings {
            match totals.iter_mut().find(|t| t.law == lf.law) {
                Some(t) => {
                    t.instances += lf.instances;
                    t.violations += lf.violations;
                }
                None => totals.push(Totals {
                    law: lf.law.clone(),
                    instances: lf.instances,
                    violations: lf.violations,
                }),
            }
        }
        frames.push(ExploreFrame {
            source,
            worlds: r.worlds,
            findings: to_value(&r.findings)?,
        });
    }
    for t in &totals {
        eprintln!("{}: {} violations in {} instances", t.law, t.violations, t.instances);
    }
    emit(
        &ExploreOut {
            command: "explore",
            config: cfg.echo(),
            totals,
            frames,
        },
        cfg.out.as_deref(),
    )
}
