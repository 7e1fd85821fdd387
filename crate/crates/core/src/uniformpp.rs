//! A certificate-level proof predicate `π(c, λ, φ)` over the frame algebra.
//!
//! Certificates are checked at a world `w` of the frame:
//! a base certificate for `φ` is valid iff `w ∈ box φ`; an oracle certificate
//! `(ξ, ψ)` for `φ` is valid iff `ξ ≺ λ`, `w ∈ ⟨ξ⟩ψ` and `w ∈ box(⟨ξ⟩ψ → φ)`.
//! Nonces carry no content beyond making certificates distinct. A certificate
//! exists at `w` exactly when `w ∈ [λ]φ`, so one exists at every world exactly
//! when `[λ]φ = ⊤`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Element, Sampling};
use crate::muench::{LevelledPredicate, Mode, MuenchError};
use crate::ordinals::Ordinal;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Certificate {
    Base {
        nonce: u64,
        formula: Element,
    },
    Oracle {
        xi: Ordinal,
        psi: Element,
        nonce: u64,
        formula: Element,
    },
}

impl Certificate {
    /// The one formula this certificate can certify.
    pub fn formula(&self) -> Element {
        match self {
            Certificate::Base { formula, .. } | Certificate::Oracle { formula, .. } => *formula,
        }
    }

    pub fn nonce(&self) -> u64 {
        match self {
            Certificate::Base { nonce, .. } | Certificate::Oracle { nonce, .. } => *nonce,
        }
    }

    pub fn with_nonce(&self, nonce: u64) -> Certificate {
        let mut c = self.clone();
        match &mut c {
            Certificate::Base { nonce: n, .. } | Certificate::Oracle { nonce: n, .. } => *n = nonce,
        }
        c
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UniformError {
    #[error(transparent)]
    Muench(#[from] MuenchError),
    #[error("world {world} outside a frame of {worlds} worlds")]
    WorldOutOfRange { world: usize, worlds: usize },
    #[error("certificate text: {0}")]
    Syntax(String),
    #[error("element {0} is not in the oracle universe listing")]
    NotListed(Element),
}

/// The frame, grid and single-oracle predicate certificates are checked against.
#[derive(Clone, Copy, Debug)]
pub struct UniformContext<'a> {
    predicate: &'a LevelledPredicate,
}

impl<'a> UniformContext<'a> {
    pub fn new(predicate: &'a LevelledPredicate) -> Result<Self, UniformError> {
        if predicate.mode() != Mode::Single {
            return Err(MuenchError::WrongMode(Mode::Single).into());
        }
        Ok(UniformContext { predicate })
    }

    pub fn predicate(&self) -> &'a LevelledPredicate {
        self.predicate
    }

    fn world(&self, w: usize) -> Result<(), UniformError> {
        let n = self.predicate.frame().worlds();
        if w < n {
            Ok(())
        } else {
            Err(UniformError::WorldOutOfRange {
                world: w,
                worlds: n,
            })
        }
    }
}

/// `π(c, λ, φ)` at world `w`.
pub fn pi_check(
    c: &Certificate,
    lambda: &Ordinal,
    phi: Element,
    ctx: &UniformContext<'_>,
    w: usize,
) -> Result<bool, UniformError> {
    let p = ctx.predicate;
    p.level_index(lambda)?;
    p.frame().owns(phi).map_err(MuenchError::from)?;
    ctx.world(w)?;
    if c.formula() != phi {
        return Ok(false);
    }
    let f = p.frame();
    Ok(match c {
        Certificate::Base { .. } => f.box_op(phi).contains(w),
        Certificate::Oracle { xi, psi, .. } => {
            let Some(level) = p.grid().index_of(xi) else {
                return Ok(false);
            };
            if xi >= lambda || !p.universe().contains(*psi) {
                return Ok(false);
            }
            let d = p.diamond(level, *psi);
            d.contains(w) && f.box_op(d.implies(phi)).contains(w)
        }
    })
}

/// Some certificate for `φ` at level `λ` and world `w`, if any exists.
/// Base certificates are preferred; oracles are tried in grid and universe order.
pub fn exists_certificate(
    lambda: &Ordinal,
    phi: Element,
    ctx: &UniformContext<'_>,
    w: usize,
) -> Result<Option<Certificate>, UniformError> {
    let p = ctx.predicate;
    let top = p.level_index(lambda)?;
    p.frame().owns(phi).map_err(MuenchError::from)?;
    ctx.world(w)?;
    let f = p.frame();
    if f.box_op(phi).contains(w) {
        return Ok(Some(Certificate::Base {
            nonce: 0,
            formula: phi,
        }));
    }
    for level in 0..top {
        for &psi in p.universe().elements() {
            let d = p.diamond(level, psi);
            if d.contains(w) && f.box_op(d.implies(phi)).contains(w) {
                return Ok(Some(Certificate::Oracle {
                    xi: p.grid().points()[level].clone(),
                    psi,
                    nonce: 0,
                    formula: phi,
                }));
            }
        }
    }
    Ok(None)
}

/// One certificate per world, present exactly when `[λ]φ = ⊤`.
pub fn exists_certificate_everywhere(
    lambda: &Ordinal,
    phi: Element,
    ctx: &UniformContext<'_>,
) -> Result<Option<Vec<Certificate>>, UniformError> {
    let mut out = Vec::new();
    for w in 0..ctx.predicate.frame().worlds() {
        match exists_certificate(lambda, phi, ctx, w)? {
            Some(c) => out.push(c),
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}

/// Compares certificate existence with the operator: per world against
/// `w ∈ [λ]φ`, and globally against `[λ]φ = ⊤`.
pub fn certificate_equivalence(
    ctx: &UniformContext<'_>,
    sampling: Sampling,
) -> Result<CheckTally, UniformError> {
    let p = ctx.predicate;
    let f = p.frame();
    let mut tally = CheckTally::default();
    for (level, lambda) in p.grid().points().iter().enumerate() {
        for phi in sampling.singles(f) {
            let value = p.apply(level, phi);
            for w in 0..f.worlds() {
                let found = exists_certificate(lambda, phi, ctx, w)?.is_some();
                tally.note(found == value.contains(w), || {
                    format!("[{lambda}]{phi} = {value}, certificate at world {w}: {found}")
                });
            }
            let global = exists_certificate_everywhere(lambda, phi, ctx)?.is_some();
            tally.note(global == value.is_top(), || {
                format!("[{lambda}]{phi} = {value}, global certificate: {global}")
            });
        }
    }
    Ok(tally)
}

/// Renders `base <nonce> <formula-id>` or
/// `oracle <ordinal> <psi-id> <nonce> <formula-id>`, ids indexing the universe.
pub fn print_certificate(c: &Certificate, ctx: &UniformContext<'_>) -> Result<String, UniformError> {
    let u = ctx.predicate.universe();
    let id = |e: Element| u.index_of(e).ok_or(UniformError::NotListed(e));
    Ok(match c {
        Certificate::Base { nonce, formula } => format!("base {nonce} {}", id(*formula)?),
        Certificate::Oracle {
            xi,
            psi,
            nonce,
            formula,
        } => format!("oracle {xi} {} {nonce} {}", id(*psi)?, id(*formula)?),
    })
}

pub fn parse_certificate(text: &str, ctx: &UniformContext<'_>) -> Result<Certificate, UniformError> {
    let u = ctx.predicate.universe();
    let words: Vec<&str> = text.split_whitespace().collect();
    let num = |w: &str| {
        w.parse::<u64>()
            .map_err(|_| UniformError::Syntax(format!("bad number `{w}`")))
    };
    let elem = |w: &str| -> Result<Element, UniformError> {
        let i = num(w)? as usize;
        u.elements()
            .get(i)
            .copied()
            .ok_or_else(|| UniformError::Syntax(format!("id {i} outside the universe listing")))
    };
    match words.as_slice() {
        ["base", nonce, formula] => Ok(Certificate::Base {
            nonce: num(nonce)?,
            formula: elem(formula)?,
        }),
        ["oracle", xi, psi, nonce, formula] => Ok(Certificate::Oracle {
            xi: Ordinal::parse(xi).map_err(|e| UniformError::Syntax(e.to_string()))?,
            psi: elem(psi)?,
            nonce: num(nonce)?,
            formula: elem(formula)?,
        }),
        _ => Err(UniformError::Syntax(format!("unrecognised certificate `{text}`"))),
    }
}

/// A random certificate drawn from the context's grid and universe.
pub fn random_certificate(rng: &mut impl Rng, ctx: &UniformContext<'_>) -> Certificate {
    let p = ctx.predicate;
    let us = p.universe().elements();
    let size = p.frame().algebra_size();
    let formula = Element::new(rng.gen_range(0..size) as u16, p.frame().worlds())
        .expect("drawn inside the algebra");
    let nonce = rng.gen_range(0..1000);
    if rng.gen_bool(0.3) {
        Certificate::Base { nonce, formula }
    } else {
        let pts = p.grid().points();
        Certificate::Oracle {
            xi: pts[rng.gen_range(0..pts.len())].clone(),
            psi: us[rng.gen_range(0..us.len())],
            nonce,
            formula,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckTally {
    pub checked: u64,
    pub violations: u64,
    pub example: Option<String>,
}

impl CheckTally {
    fn note(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.example.is_none() {
                self.example = Some(what());
            }
        }
    }

    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationReport {
    pub single_formula: CheckTally,
    pub padding: CheckTally,
    pub monotonicity: CheckTally,
}

impl NormalizationReport {
    pub fn holds(&self) -> bool {
        self.single_formula.holds() && self.padding.holds() && self.monotonicity.holds()
    }
}

/// Checks that each certificate proves at most its own formula, that every
/// derivable pair has at least `padding` distinct valid certificates, and that
/// validity persists to higher grid levels.
pub fn normalization_checks(
    ctx: &UniformContext<'_>,
    samples: usize,
    padding: u64,
    seed: u64,
) -> Result<NormalizationReport, UniformError> {
    let p = ctx.predicate;
    let f = p.frame();
    let pts = p.grid().points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut single = CheckTally::default();
    let mut pad = CheckTally::default();
    let mut mono = CheckTally::default();

    for _ in 0..samples {
        let c = random_certificate(&mut rng, ctx);
        let lambda = &pts[rng.gen_range(0..pts.len())];
        let w = rng.gen_range(0..f.worlds());
        let mut certified = 0;
        for phi in f.elements() {
            if pi_check(&c, lambda, phi, ctx, w)? {
                certified += 1;
                single.note(phi == c.formula(), || format!("{c:?} certifies {phi}"));
            }
        }
        single.note(certified <= 1, || format!("{c:?} certifies {certified} formulas"));
        monotone_from(ctx, &c, lambda, w, &mut mono)?;
    }

    for lambda in pts {
        for phi in f.elements() {
            for w in 0..f.worlds() {
                let Some(c) = exists_certificate(lambda, phi, ctx, w)? else {
                    continue;
                };
                let mut distinct = Vec::new();
                for nonce in 0..padding {
                    let padded = c.with_nonce(nonce);
                    if pi_check(&padded, lambda, phi, ctx, w)? && !distinct.contains(&padded) {
                        distinct.push(padded);
                    }
                }
                pad.note(distinct.len() as u64 >= padding, || {
                    format!("only {} certificates for {phi} at {lambda}, world {w}", distinct.len())
                });
                monotone_from(ctx, &c, lambda, w, &mut mono)?;
            }
        }
    }
    Ok(NormalizationReport {
        single_formula: single,
        padding: pad,
        monotonicity: mono,
    })
}

fn monotone_from(
    ctx: &UniformContext<'_>,
    c: &Certificate,
    lambda: &Ordinal,
    w: usize,
    tally: &mut CheckTally,
) -> Result<(), UniformError> {
    let phi = c.formula();
    if !pi_check(c, lambda, phi, ctx, w)? {
        return Ok(());
    }
    for higher in ctx.predicate.grid().points().iter().filter(|o| *o >= lambda) {
        let ok = pi_check(c, higher, phi, ctx, w)?;
        tally.note(ok, || format!("{c:?} valid at {lambda} but not at {higher}, world {w}"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyRecord {
    pub property: String,
    pub asserted: bool,
    pub in_scope: bool,
    pub tally: CheckTally,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UprovReport {
    pub worlds: usize,
    pub grid: String,
    pub properties: Vec<PropertyRecord>,
}

impl UprovReport {
    pub fn passed(&self) -> bool {
        self.properties
            .iter()
            .all(|r| !r.asserted || r.tally.holds())
    }

    pub fn get(&self, property: &str) -> Option<&PropertyRecord> {
        self.properties.iter().find(|r| r.property == property)
    }
}

/// Instance checks of the uniform proof predicate properties.
pub fn uprov_property_suite(
    ctx: &UniformContext<'_>,
    sampling: Sampling,
    seed: u64,
) -> Result<UprovReport, UniformError> {
    let p = ctx.predicate;
    let f = p.frame();
    let pts = p.grid().points();
    let singles = sampling.singles(f);
    let pairs = sampling.pairs(f);
    let worlds = 0..f.worlds();

    let mut base = CheckTally::default();
    for lambda in pts {
        for &phi in &singles {
            for w in worlds.clone() {
                if f.box_op(phi).contains(w) {
                    let found = exists_certificate(lambda, phi, ctx, w)?.is_some();
                    base.note(found, || format!("{phi} base provable at world {w}, no certificate at {lambda}"));
                }
            }
            if f.box_op(phi).is_top() {
                let found = exists_certificate_everywhere(lambda, phi, ctx)?.is_some();
                base.note(found, || format!("{phi} valid-boxed, no global certificate at {lambda}"));
            }
        }
    }

    let mut mp = CheckTally::default();
    for lambda in pts {
        for &(x, y) in &pairs {
            for w in worlds.clone() {
                let has = |e: Element| exists_certificate(lambda, e, ctx, w).map(|c| c.is_some());
                if has(x.implies(y))? && has(x)? {
                    let ok = has(y)?;
                    mp.note(ok, || format!("mp fails at {lambda}, world {w}: {x} -> {y}"));
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mono = CheckTally::default();
    let mut stable = CheckTally::default();
    let mut boxed_pos = CheckTally::default();
    let mut boxed_neg = CheckTally::default();
    let draws = match sampling {
        Sampling::Exhaustive => 64 * f.algebra_size(),
        Sampling::Random { count, .. } => count,
    };
    for _ in 0..draws {
        let c = random_certificate(&mut rng, ctx);
        let lambda = &pts[rng.gen_range(0..pts.len())];
        let w = rng.gen_range(0..f.worlds());
        monotone_from(ctx, &c, lambda, w, &mut mono)?;
        let first = pi_check(&c, lambda, c.formula(), ctx, w)?;
        let again = pi_check(&c, lambda, c.formula(), ctx, w)?;
        stable.note(first == again, || format!("{c:?} changed verdict on re-check"));
        let mut valid_bits = 0u16;
        for v in worlds.clone() {
            if pi_check(&c, lambda, c.formula(), ctx, v)? {
                valid_bits |= 1 << v;
            }
        }
        let s = f.element(valid_bits).expect("bits from worlds");
        boxed_pos.note(s.le(f.box_op(s)), || format!("{c:?} at {lambda}: validity set {s} not boxed"));
        boxed_neg.note((!s).le(f.box_op(!s)), || format!("{c:?} at {lambda}: invalidity set {} not boxed", !s));
    }

    let mut lift = CheckTally::default();
    for (hi, lambda) in pts.iter().enumerate() {
        for (lo, xi) in pts[..hi].iter().enumerate() {
            for &psi in p.universe().elements() {
                let d = p.diamond(lo, psi);
                for w in d.worlds() {
                    let found = exists_certificate(lambda, d, ctx, w)?.is_some();
                    lift.note(found, || format!("<{xi}>{psi} at world {w} not certified at {lambda}"));
                }
            }
        }
    }

    let rec = |property: &str, asserted: bool, tally: CheckTally, note: &str| PropertyRecord {
        property: property.into(),
        asserted,
        in_scope: true,
        tally,
        note: note.into(),
    };
    Ok(UprovReport {
        worlds: f.worlds(),
        grid: p.grid().to_string(),
        properties: vec![
            PropertyRecord {
                property: "induction".into(),
                asserted: false,
                in_scope: false,
                tally: CheckTally::default(),
                note: "arithmetic induction has no counterpart in a finite algebra".into(),
            },
            rec("base_provable", true, base, "w in box(phi) gives a certificate at every level"),
            rec("modus_ponens", false, mp, "closure of certificate existence under modus ponens"),
            rec("level_monotonicity", true, mono, "a valid certificate stays valid at higher levels"),
            rec("stable_verdicts", true, stable, "verdicts re-derive identically in the same context"),
            rec("boxed_validity", false, boxed_pos, "variant: validity set below its box"),
            rec("boxed_invalidity", false, boxed_neg, "variant: invalidity set below its box"),
            rec("diamond_lift", true, lift, "<xi>psi at w is certified at every higher level"),
        ],
    })
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Base { nonce, formula } => write!(f, "base({nonce}, {formula})"),
            Certificate::Oracle {
                xi,
                psi,
                nonce,
                formula,
            } => write!(f, "oracle({xi}, {psi}, {nonce}, {formula})"),
        }
    }
}
