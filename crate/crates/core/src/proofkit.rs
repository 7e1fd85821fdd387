//! Hilbert-style proofs for GLP and GL^■.
//!
//! Every axiom justification carries its label parameters, so checking a line
//! is pattern matching against one schema. Tautologies are decided by a truth
//! table over the propositional skeleton (boxed subformulas abstracted).

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ordinals::Ordinal;
use crate::syntax::{abstract_atoms, Formula, ModalLabel, SyntaxError};

/// Truth tables are refused above this many skeleton atoms.
pub const MAX_TAUTOLOGY_ATOMS: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxiomSystem {
    /// GLP restricted to labels strictly below `cap`.
    Glp { cap: Ordinal },
    /// GL for `[0]` plus the operator `■` with axioms bsq1 to bsq3.
    GlBlackSquare,
}

impl fmt::Display for AxiomSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxiomSystem::Glp { cap } => write!(f, "glp {cap}"),
            AxiomSystem::GlBlackSquare => write!(f, "gl-box"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Justification {
    Taut,
    /// `[ξ](A→B) → ([ξ]A → [ξ]B)`
    AxDistrib(Ordinal),
    /// `[ξ]A → [ξ][ξ]A`
    AxTrans(Ordinal),
    /// `[ξ]([ξ]A → A) → [ξ]A`
    AxLob(Ordinal),
    /// `⟨ζ⟩A → ⟨ξ⟩A` for ξ ≺ ζ
    AxDiaMono(Ordinal, Ordinal),
    /// `⟨ξ⟩A → [ζ]⟨ξ⟩A` for ξ ≺ ζ
    AxIntrospect(Ordinal, Ordinal),
    /// `[0]A → ■A`
    BSq1,
    /// `■(A→B) → (■A → ■B)`
    BSq2,
    /// `■A → ■■A`
    BSq3,
    /// 1-based lines: `i` holds `A → B`, `j` holds `A`.
    MP(usize, usize),
    /// Line `i` holds `A`; this line is `[label]A`.
    Nec(ModalLabel, usize),
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Justification::Taut => write!(f, "taut"),
            Justification::AxDistrib(o) => write!(f, "K {o}"),
            Justification::AxTrans(o) => write!(f, "4 {o}"),
            Justification::AxLob(o) => write!(f, "lob {o}"),
            Justification::AxDiaMono(a, b) => write!(f, "diamono {a} {b}"),
            Justification::AxIntrospect(a, b) => write!(f, "intro {a} {b}"),
            Justification::BSq1 => write!(f, "bsq1"),
            Justification::BSq2 => write!(f, "bsq2"),
            Justification::BSq3 => write!(f, "bsq3"),
            Justification::MP(i, j) => write!(f, "mp {i} {j}"),
            Justification::Nec(l, i) => write!(f, "nec {l} {i}"),
        }
    }
}

impl Justification {
    fn ordinals(&self) -> Vec<&Ordinal> {
        match self {
            Justification::AxDistrib(o) | Justification::AxTrans(o) | Justification::AxLob(o) => {
                vec![o]
            }
            Justification::AxDiaMono(a, b) | Justification::AxIntrospect(a, b) => vec![a, b],
            Justification::Nec(ModalLabel::Ord(o), _) => vec![o],
            _ => vec![],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProofLine {
    pub formula: Formula,
    pub justification: Justification,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Proof {
    pub system: AxiomSystem,
    pub lines: Vec<ProofLine>,
}

impl Proof {
    pub fn new(system: AxiomSystem, lines: Vec<(Formula, Justification)>) -> Self {
        Proof {
            system,
            lines: lines
                .into_iter()
                .map(|(formula, justification)| ProofLine {
                    formula,
                    justification,
                })
                .collect(),
        }
    }

    /// The last line's formula.
    pub fn conclusion(&self) -> Option<&Formula> {
        self.lines.last().map(|l| &l.formula)
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TautologyError {
    #[error("{0} distinct atoms after abstraction (limit 24); split the formula")]
    TooManyAtoms(usize),
}

/// Truth-table verdict on the propositional skeleton of `f`.
pub fn is_tautology(f: &Formula) -> Result<bool, TautologyError> {
    let skeleton = abstract_atoms(f).skeleton;
    let atoms: Vec<String> = skeleton.atoms().into_iter().collect();
    if atoms.len() > MAX_TAUTOLOGY_ATOMS {
        return Err(TautologyError::TooManyAtoms(atoms.len()));
    }
    let index: HashMap<&str, usize> = atoms
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_str(), i))
        .collect();
    let mut code = Vec::new();
    compile(&skeleton, &index, &mut code);
    Ok(table_holds(&code, atoms.len()))
}

#[derive(Clone, Copy)]
enum Op {
    Atom(usize),
    Top,
    Bot,
    Not,
    And,
    Or,
    Imp,
    Iff,
}

fn compile(f: &Formula, index: &HashMap<&str, usize>, code: &mut Vec<Op>) {
    let bin = |a: &Formula, b: &Formula, op: Op, code: &mut Vec<Op>| {
        compile(a, index, code);
        compile(b, index, code);
        code.push(op);
    };
    match f {
        Formula::Atom(a) => code.push(Op::Atom(index[a.as_str()])),
        Formula::Top => code.push(Op::Top),
        Formula::Bot => code.push(Op::Bot),
        Formula::Not(a) => {
            compile(a, index, code);
            code.push(Op::Not);
        }
        Formula::And(a, b) => bin(a, b, Op::And, code),
        Formula::Or(a, b) => bin(a, b, Op::Or, code),
        Formula::Imp(a, b) => bin(a, b, Op::Imp, code),
        Formula::Iff(a, b) => bin(a, b, Op::Iff, code),
        Formula::Box(..) => unreachable!("skeleton contains no boxes"),
    }
}

/// Column patterns for the first six atoms within a 64-row block.
const LOW_ATOMS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

fn table_holds(code: &[Op], atoms: usize) -> bool {
    let rows_mask = if atoms >= 6 {
        u64::MAX
    } else {
        (1u64 << (1 << atoms)) - 1
    };
    let blocks = 1u64 << atoms.saturating_sub(6);
    let mut stack: Vec<u64> = Vec::with_capacity(code.len());
    for block in 0..blocks {
        stack.clear();
        for op in code {
            let v = match *op {
                Op::Atom(i) if i < 6 => LOW_ATOMS[i],
                Op::Atom(i) => {
                    if block >> (i - 6) & 1 == 1 {
                        u64::MAX
                    } else {
                        0
                    }
                }
                Op::Top => u64::MAX,
                Op::Bot => 0,
                Op::Not => !stack.pop().unwrap(),
                bin => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    match bin {
                        Op::And => a & b,
                        Op::Or => a | b,
                        Op::Imp => !a | b,
                        Op::Iff => !(a ^ b),
                        _ => unreachable!(),
                    }
                }
            };
            stack.push(v);
        }
        if stack[0] & rows_mask != rows_mask {
            return false;
        }
    }
    true
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LineFault {
    #[error("the proof has no lines")]
    Empty,
    #[error("not a propositional tautology")]
    NotTautology,
    #[error(transparent)]
    Tautology(#[from] TautologyError),
    #[error("formula does not match the {schema} schema")]
    PatternMismatch { schema: &'static str },
    #[error("label order violated: {lower} must be below {upper}")]
    LabelOrder { lower: Ordinal, upper: Ordinal },
    #[error("label {label} is not available in {system}")]
    LabelNotAllowed { label: String, system: String },
    #[error("{rule} is not a rule of {system}")]
    WrongSystem { rule: &'static str, system: String },
    #[error("line reference {index} does not point to an earlier line")]
    BadIndex { index: usize },
    #[error("modus ponens mismatch: line {imp} is not an implication from line {ant} to this line")]
    MpMismatch { imp: usize, ant: usize },
    #[error("necessitation mismatch: this line is not [{label}] applied to line {index}")]
    NecMismatch { label: ModalLabel, index: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {fault}")]
pub struct ProofError {
    /// 1-based line number; 0 for whole-proof faults.
    pub line: usize,
    pub fault: LineFault,
}

/// Checks every line of `p` in order and reports the first failure.
pub fn check_proof(p: &Proof) -> Result<(), ProofError> {
    if p.lines.is_empty() {
        return Err(ProofError {
            line: 0,
            fault: LineFault::Empty,
        });
    }
    for k in 0..p.lines.len() {
        check_line(p, k).map_err(|fault| ProofError {
            line: k + 1,
            fault,
        })?;
    }
    Ok(())
}

fn check_line(p: &Proof, k: usize) -> Result<(), LineFault> {
    let sys = &p.system;
    let f = &p.lines[k].formula;
    check_language(sys, f)?;
    let earlier = |i: usize| -> Result<&Formula, LineFault> {
        if i >= 1 && i <= k {
            Ok(&p.lines[i - 1].formula)
        } else {
            Err(LineFault::BadIndex { index: i })
        }
    };
    match &p.lines[k].justification {
        Justification::Taut => {
            if is_tautology(f)? {
                Ok(())
            } else {
                Err(LineFault::NotTautology)
            }
        }
        Justification::AxDistrib(o) => {
            modal_label_ok(sys, o)?;
            expect(match_distrib(f, &ModalLabel::Ord(o.clone())), "K")
        }
        Justification::AxTrans(o) => {
            modal_label_ok(sys, o)?;
            expect(match_trans(f, &ModalLabel::Ord(o.clone())), "4")
        }
        Justification::AxLob(o) => {
            modal_label_ok(sys, o)?;
            expect(match_lob(f, &ModalLabel::Ord(o.clone())), "lob")
        }
        Justification::AxDiaMono(xi, zeta) => {
            glp_pair_ok(sys, xi, zeta, "diamono")?;
            expect(match_dia_mono(f, xi, zeta), "diamono")
        }
        Justification::AxIntrospect(xi, zeta) => {
            glp_pair_ok(sys, xi, zeta, "intro")?;
            expect(match_introspect(f, xi, zeta), "intro")
        }
        Justification::BSq1 => {
            black_only(sys, "bsq1")?;
            expect(match_bsq1(f), "bsq1")
        }
        Justification::BSq2 => {
            black_only(sys, "bsq2")?;
            expect(match_distrib(f, &ModalLabel::BlackSquare), "bsq2")
        }
        Justification::BSq3 => {
            black_only(sys, "bsq3")?;
            expect(match_trans(f, &ModalLabel::BlackSquare), "bsq3")
        }
        Justification::MP(i, j) => {
            let imp = earlier(*i)?;
            let ant = earlier(*j)?;
            match imp.as_imp() {
                Some((a, b)) if a == ant && b == f => Ok(()),
                _ => Err(LineFault::MpMismatch { imp: *i, ant: *j }),
            }
        }
        Justification::Nec(label, i) => {
            match label {
                ModalLabel::Ord(o) => modal_label_ok(sys, o)?,
                ModalLabel::BlackSquare => {
                    return Err(LineFault::WrongSystem {
                        rule: "necessitation for #",
                        system: sys.to_string(),
                    })
                }
            }
            let prem = earlier(*i)?;
            match f.as_box() {
                Some((l, body)) if l == label && body == prem => Ok(()),
                _ => Err(LineFault::NecMismatch {
                    label: label.clone(),
                    index: *i,
                }),
            }
        }
    }
}

fn expect(matched: bool, schema: &'static str) -> Result<(), LineFault> {
    if matched {
        Ok(())
    } else {
        Err(LineFault::PatternMismatch { schema })
    }
}

fn label_in_system(sys: &AxiomSystem, l: &ModalLabel) -> bool {
    match (sys, l) {
        (AxiomSystem::Glp { cap }, ModalLabel::Ord(o)) => o < cap,
        (AxiomSystem::Glp { .. }, ModalLabel::BlackSquare) => false,
        (AxiomSystem::GlBlackSquare, ModalLabel::Ord(o)) => o.is_zero(),
        (AxiomSystem::GlBlackSquare, ModalLabel::BlackSquare) => true,
    }
}

fn check_language(sys: &AxiomSystem, f: &Formula) -> Result<(), LineFault> {
    let mut bad = None;
    f.for_each_label(&mut |l| {
        if bad.is_none() && !label_in_system(sys, l) {
            bad = Some(l.clone());
        }
    });
    match bad {
        Some(l) => Err(LineFault::LabelNotAllowed {
            label: l.to_string(),
            system: sys.to_string(),
        }),
        None => Ok(()),
    }
}

fn modal_label_ok(sys: &AxiomSystem, o: &Ordinal) -> Result<(), LineFault> {
    if label_in_system(sys, &ModalLabel::Ord(o.clone())) {
        Ok(())
    } else {
        Err(LineFault::LabelNotAllowed {
            label: o.to_string(),
            system: sys.to_string(),
        })
    }
}

fn glp_pair_ok(
    sys: &AxiomSystem,
    xi: &Ordinal,
    zeta: &Ordinal,
    rule: &'static str,
) -> Result<(), LineFault> {
    if *sys == AxiomSystem::GlBlackSquare {
        return Err(LineFault::WrongSystem {
            rule,
            system: sys.to_string(),
        });
    }
    modal_label_ok(sys, xi)?;
    modal_label_ok(sys, zeta)?;
    if xi < zeta {
        Ok(())
    } else {
        Err(LineFault::LabelOrder {
            lower: xi.clone(),
            upper: zeta.clone(),
        })
    }
}

fn black_only(sys: &AxiomSystem, rule: &'static str) -> Result<(), LineFault> {
    if *sys == AxiomSystem::GlBlackSquare {
        Ok(())
    } else {
        Err(LineFault::WrongSystem {
            rule,
            system: sys.to_string(),
        })
    }
}

fn boxed_with<'a>(f: &'a Formula, l: &ModalLabel) -> Option<&'a Formula> {
    match f.as_box() {
        Some((m, body)) if m == l => Some(body),
        _ => None,
    }
}

fn match_distrib(f: &Formula, l: &ModalLabel) -> bool {
    let m = || -> Option<bool> {
        let (lhs, rhs) = f.as_imp()?;
        let (a, b) = boxed_with(lhs, l)?.as_imp()?;
        let (ba, bb) = rhs.as_imp()?;
        Some(boxed_with(ba, l)? == a && boxed_with(bb, l)? == b)
    };
    m().unwrap_or(false)
}

fn match_trans(f: &Formula, l: &ModalLabel) -> bool {
    let m = || -> Option<bool> {
        let (lhs, rhs) = f.as_imp()?;
        boxed_with(lhs, l)?;
        Some(boxed_with(rhs, l)? == lhs)
    };
    m().unwrap_or(false)
}

fn match_lob(f: &Formula, l: &ModalLabel) -> bool {
    let m = || -> Option<bool> {
        let (lhs, rhs) = f.as_imp()?;
        let a = boxed_with(rhs, l)?;
        let (ba, a2) = boxed_with(lhs, l)?.as_imp()?;
        Some(ba == rhs && a2 == a)
    };
    m().unwrap_or(false)
}

fn diamond_with<'a>(f: &'a Formula, o: &Ordinal) -> Option<&'a Formula> {
    match f.as_diamond() {
        Some((ModalLabel::Ord(m), body)) if m == o => Some(body),
        _ => None,
    }
}

fn match_dia_mono(f: &Formula, xi: &Ordinal, zeta: &Ordinal) -> bool {
    let m = || -> Option<bool> {
        let (lhs, rhs) = f.as_imp()?;
        Some(diamond_with(lhs, zeta)? == diamond_with(rhs, xi)?)
    };
    m().unwrap_or(false)
}

fn match_introspect(f: &Formula, xi: &Ordinal, zeta: &Ordinal) -> bool {
    let m = || -> Option<bool> {
        let (lhs, rhs) = f.as_imp()?;
        diamond_with(lhs, xi)?;
        Some(boxed_with(rhs, &ModalLabel::Ord(zeta.clone()))? == lhs)
    };
    m().unwrap_or(false)
}

fn match_bsq1(f: &Formula) -> bool {
    let m = || -> Option<bool> {
        let (lhs, rhs) = f.as_imp()?;
        let a = boxed_with(lhs, &ModalLabel::Ord(Ordinal::zero()))?;
        Some(boxed_with(rhs, &ModalLabel::BlackSquare)? == a)
    };
    m().unwrap_or(false)
}

/// Every ordinal label occurring in a proof, in formulas or justifications.
pub fn proof_labels(p: &Proof) -> BTreeSet<Ordinal> {
    let mut out = BTreeSet::new();
    for line in &p.lines {
        out.extend(crate::syntax::signature(&line.formula));
        out.extend(line.justification.ordinals().into_iter().cloned());
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScanError {
    #[error("conservativity scan applies to GLP proofs, not {0}")]
    NotApplicable(String),
}

/// True iff every label used by the proof is strictly below `bound`.
pub fn conservativity_scan(p: &Proof, bound: &Ordinal) -> Result<bool, ScanError> {
    if p.system == AxiomSystem::GlBlackSquare {
        return Err(ScanError::NotApplicable(p.system.to_string()));
    }
    Ok(proof_labels(p).iter().all(|o| o < bound))
}

/// Incremental construction of checkable proofs. Identical formulas with
/// identical justifications are emitted once.
#[derive(Debug)]
pub struct ProofBuilder {
    system: AxiomSystem,
    lines: Vec<ProofLine>,
    seen: HashMap<(Formula, Justification), usize>,
}

impl ProofBuilder {
    pub fn new(system: AxiomSystem) -> Self {
        ProofBuilder {
            system,
            lines: Vec::new(),
            seen: HashMap::new(),
        }
    }

    /// Formula of a 1-based line.
    pub fn formula(&self, line: usize) -> &Formula {
        &self.lines[line - 1].formula
    }

    pub fn push(&mut self, formula: Formula, justification: Justification) -> usize {
        let key = (formula, justification);
        if let Some(&i) = self.seen.get(&key) {
            return i;
        }
        self.lines.push(ProofLine {
            formula: key.0.clone(),
            justification: key.1.clone(),
        });
        let i = self.lines.len();
        self.seen.insert(key, i);
        i
    }

    pub fn taut(&mut self, f: Formula) -> usize {
        debug_assert_eq!(is_tautology(&f), Ok(true), "{f}");
        self.push(f, Justification::Taut)
    }

    /// From `i: A → B` and `j: A`, derives `B`.
    pub fn mp(&mut self, i: usize, j: usize) -> usize {
        let (_, b) = self
            .formula(i)
            .as_imp()
            .expect("modus ponens on a non-implication");
        let b = b.clone();
        self.push(b, Justification::MP(i, j))
    }

    pub fn nec(&mut self, label: impl Into<ModalLabel>, i: usize) -> usize {
        let label = label.into();
        let f = Formula::boxed(label.clone(), self.formula(i).clone());
        self.push(f, Justification::Nec(label, i))
    }

    pub fn k(&mut self, o: &Ordinal, a: Formula, b: Formula) -> usize {
        let f = distrib_instance(ModalLabel::Ord(o.clone()), a, b);
        self.push(f, Justification::AxDistrib(o.clone()))
    }

    pub fn four(&mut self, o: &Ordinal, a: Formula) -> usize {
        let f = trans_instance(ModalLabel::Ord(o.clone()), a);
        self.push(f, Justification::AxTrans(o.clone()))
    }

    pub fn lob(&mut self, o: &Ordinal, a: Formula) -> usize {
        let l = ModalLabel::Ord(o.clone());
        let ba = Formula::boxed(l.clone(), a.clone());
        let f = Formula::imp(
            Formula::boxed(l, Formula::imp(ba.clone(), a)),
            ba,
        );
        self.push(f, Justification::AxLob(o.clone()))
    }

    pub fn dia_mono(&mut self, xi: &Ordinal, zeta: &Ordinal, a: Formula) -> usize {
        let f = Formula::imp(
            Formula::diamond(zeta.clone(), a.clone()),
            Formula::diamond(xi.clone(), a),
        );
        self.push(f, Justification::AxDiaMono(xi.clone(), zeta.clone()))
    }

    pub fn introspect(&mut self, xi: &Ordinal, zeta: &Ordinal, a: Formula) -> usize {
        let d = Formula::diamond(xi.clone(), a);
        let f = Formula::imp(d.clone(), Formula::boxed(zeta.clone(), d));
        self.push(f, Justification::AxIntrospect(xi.clone(), zeta.clone()))
    }

    pub fn bsq1(&mut self, a: Formula) -> usize {
        let f = Formula::imp(Formula::boxed(Ordinal::zero(), a.clone()), Formula::black(a));
        self.push(f, Justification::BSq1)
    }

    pub fn bsq2(&mut self, a: Formula, b: Formula) -> usize {
        let f = distrib_instance(ModalLabel::BlackSquare, a, b);
        self.push(f, Justification::BSq2)
    }

    pub fn bsq3(&mut self, a: Formula) -> usize {
        let f = trans_instance(ModalLabel::BlackSquare, a);
        self.push(f, Justification::BSq3)
    }

    /// Derives `concl` from the premise lines via the tautology
    /// `p1 → (p2 → … → concl)` and repeated modus ponens.
    pub fn chain(&mut self, premises: &[usize], concl: Formula) -> usize {
        let mut t = concl;
        for &p in premises.iter().rev() {
            t = Formula::imp(self.formula(p).clone(), t);
        }
        let mut cur = self.taut(t);
        for &p in premises {
            cur = self.mp(cur, p);
        }
        cur
    }

    /// From `i: A → B`, derives `[o]A → [o]B`.
    pub fn box_mono(&mut self, o: &Ordinal, i: usize) -> usize {
        let (a, b) = self.formula(i).as_imp().expect("box_mono needs an implication");
        let (a, b) = (a.clone(), b.clone());
        let n = self.nec(o.clone(), i);
        let k = self.k(o, a, b);
        self.mp(k, n)
    }

    /// `[o]A → [o]B` for a tautology `A → B`.
    pub fn box_mono_taut(&mut self, o: &Ordinal, a: Formula, b: Formula) -> usize {
        let t = self.taut(Formula::imp(a, b));
        self.box_mono(o, t)
    }

    /// From `i: A → B`, derives `⟨o⟩A → ⟨o⟩B`.
    pub fn diamond_mono(&mut self, o: &Ordinal, i: usize) -> usize {
        let (a, b) = self.formula(i).as_imp().expect("diamond_mono needs an implication");
        let (a, b) = (a.clone(), b.clone());
        let contra = self.chain(&[i], Formula::imp(Formula::not(b.clone()), Formula::not(a.clone())));
        let boxed = self.box_mono(o, contra);
        self.chain(
            &[boxed],
            Formula::imp(Formula::diamond(o.clone(), a), Formula::diamond(o.clone(), b)),
        )
    }

    /// `[lo]X → [hi]X` for `lo ≼ hi`.
    pub fn level_mono(&mut self, lo: &Ordinal, hi: &Ordinal, x: Formula) -> usize {
        let target = Formula::imp(
            Formula::boxed(lo.clone(), x.clone()),
            Formula::boxed(hi.clone(), x.clone()),
        );
        if lo == hi {
            return self.taut(target);
        }
        let nx = Formula::not(x.clone());
        let nnx = Formula::not(nx.clone());
        let dm = self.dia_mono(lo, hi, nx);
        let up = self.box_mono_taut(lo, x.clone(), nnx.clone());
        let down = self.box_mono_taut(hi, nnx, x);
        self.chain(&[dm, up, down], target)
    }

    /// `[o]X → (⟨o⟩⊤ → ⟨o⟩X)`.
    pub fn box_diamond_k(&mut self, o: &Ordinal, x: Formula) -> usize {
        let nx = Formula::not(x.clone());
        let nt = Formula::not(Formula::Top);
        let t = self.taut(Formula::imp(x.clone(), Formula::imp(nx.clone(), nt.clone())));
        let m = self.box_mono(o, t);
        let k = self.k(o, nx, nt);
        let target = Formula::imp(
            Formula::boxed(o.clone(), x.clone()),
            Formula::imp(
                Formula::diamond(o.clone(), Formula::Top),
                Formula::diamond(o.clone(), x),
            ),
        );
        self.chain(&[m, k], target)
    }

    /// `⟨o⟩⟨o⟩X → ⟨o⟩X`.
    pub fn diamond_trans(&mut self, o: &Ordinal, x: Formula) -> usize {
        let nx = Formula::not(x.clone());
        let bnx = Formula::boxed(o.clone(), nx.clone());
        let four = self.four(o, nx);
        let m = self.box_mono_taut(o, bnx.clone(), Formula::not(Formula::not(bnx)));
        let dx = Formula::diamond(o.clone(), x.clone());
        self.chain(
            &[four, m],
            Formula::imp(Formula::diamond(o.clone(), dx.clone()), dx),
        )
    }

    pub fn finish(self) -> Proof {
        Proof {
            system: self.system,
            lines: self.lines,
        }
    }
}

fn distrib_instance(l: ModalLabel, a: Formula, b: Formula) -> Formula {
    Formula::imp(
        Formula::boxed(l.clone(), Formula::imp(a.clone(), b.clone())),
        Formula::imp(Formula::boxed(l.clone(), a), Formula::boxed(l, b)),
    )
}

fn trans_instance(l: ModalLabel, a: Formula) -> Formula {
    let ba = Formula::boxed(l.clone(), a);
    Formula::imp(ba.clone(), Formula::boxed(l, ba))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeriveError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("formula outside the language of {system}: {formula}")]
    Language { system: String, formula: String },
}

fn glp_cap(top: &Ordinal, formulas: &[&Formula]) -> Result<AxiomSystem, DeriveError> {
    let mut max = top.clone();
    for f in formulas {
        if f.has_black_square() {
            return Err(DeriveError::Language {
                system: "glp".into(),
                formula: f.to_string(),
            });
        }
        if let Some(m) = crate::syntax::signature(f).into_iter().next_back() {
            max = max.max(m);
        }
    }
    Ok(AxiomSystem::Glp { cap: max.succ() })
}

/// Proof of `[α]⟨β⟩⊤` for `β ≺ α`.
pub fn derive_cons_provable(alpha: &Ordinal, beta: &Ordinal) -> Result<Proof, DeriveError> {
    if beta >= alpha {
        return Err(DeriveError::Precondition(format!(
            "need beta < alpha, got beta = {beta}, alpha = {alpha}"
        )));
    }
    let mut b = ProofBuilder::new(glp_cap(alpha, &[])?);
    let d = Formula::diamond(beta.clone(), Formula::Top);
    let intro = b.introspect(beta, alpha, Formula::Top);
    let t = b.taut(Formula::imp(Formula::not(Formula::Top), d.clone()));
    let ex_falso = b.box_mono(beta, t);
    let up = b.level_mono(beta, alpha, d.clone());
    b.chain(&[intro, ex_falso, up], Formula::boxed(alpha.clone(), d));
    Ok(b.finish())
}

/// Proof of `⟨α⟩⊤ → (⟨β⟩φ ↔ ⟨α⟩⟨β⟩φ)` for `β ≺ α`.
pub fn derive_cons_absorption(
    alpha: &Ordinal,
    beta: &Ordinal,
    phi: &Formula,
) -> Result<Proof, DeriveError> {
    if beta >= alpha {
        return Err(DeriveError::Precondition(format!(
            "need beta < alpha, got beta = {beta}, alpha = {alpha}"
        )));
    }
    let mut b = ProofBuilder::new(glp_cap(alpha, &[phi])?);
    let dphi = Formula::diamond(beta.clone(), phi.clone());
    let intro = b.introspect(beta, alpha, phi.clone());
    let lift = b.box_diamond_k(alpha, dphi.clone());
    let down = b.dia_mono(beta, alpha, dphi.clone());
    let trans = b.diamond_trans(beta, phi.clone());
    let target = Formula::imp(
        Formula::diamond(alpha.clone(), Formula::Top),
        Formula::iff(dphi.clone(), Formula::diamond(alpha.clone(), dphi)),
    );
    b.chain(&[intro, lift, down, trans], target);
    Ok(b.finish())
}

/// Proof of `⟨α⟩⊤ → ((⟨β⟩φ ∨ [0]ψ) ↔ ⟨β⟩(φ ∨ [0]ψ))` for `0 ≺ β ≼ α`.
pub fn derive_box_disjunction(
    alpha: &Ordinal,
    beta: &Ordinal,
    phi: &Formula,
    psi: &Formula,
) -> Result<Proof, DeriveError> {
    if beta.is_zero() || beta > alpha {
        return Err(DeriveError::Precondition(format!(
            "need 0 < beta <= alpha, got beta = {beta}, alpha = {alpha}"
        )));
    }
    let zero = Ordinal::zero();
    let mut b = ProofBuilder::new(glp_cap(alpha, &[phi, psi])?);
    let bpsi = Formula::boxed(zero.clone(), psi.clone());
    let z = Formula::or(phi.clone(), bpsi.clone());
    let mut premises = Vec::new();

    // [0]ψ case of the forward direction
    premises.push(b.four(&zero, psi.clone()));
    premises.push(b.level_mono(&zero, alpha, bpsi.clone()));
    premises.push(b.box_diamond_k(alpha, bpsi.clone()));
    if beta < alpha {
        premises.push(b.dia_mono(beta, alpha, bpsi.clone()));
    }
    let t = b.taut(Formula::imp(bpsi.clone(), z.clone()));
    premises.push(b.diamond_mono(beta, t));

    // ⟨β⟩φ case
    let t = b.taut(Formula::imp(phi.clone(), z.clone()));
    premises.push(b.diamond_mono(beta, t));

    // backward direction: ¬[0]ψ is itself [β]-provable
    let nnpsi = Formula::not(Formula::not(psi.clone()));
    premises.push(b.introspect(&zero, beta, Formula::not(psi.clone())));
    let up = b.box_mono_taut(&zero, psi.clone(), nnpsi.clone());
    premises.push(b.box_mono_taut(&zero, nnpsi.clone(), psi.clone()));
    let bnn = Formula::boxed(zero.clone(), nnpsi);
    let contra = b.chain(
        &[up],
        Formula::imp(Formula::not(bnn), Formula::not(bpsi.clone())),
    );
    premises.push(b.box_mono(beta, contra));
    let nz = Formula::not(z.clone());
    let nphi = Formula::not(phi.clone());
    let t = b.taut(Formula::imp(
        Formula::not(bpsi.clone()),
        Formula::imp(nphi.clone(), nz.clone()),
    ));
    premises.push(b.box_mono(beta, t));
    premises.push(b.k(beta, nphi, nz));

    let target = Formula::imp(
        Formula::diamond(alpha.clone(), Formula::Top),
        Formula::iff(
            Formula::or(Formula::diamond(beta.clone(), phi.clone()), bpsi),
            Formula::diamond(beta.clone(), z),
        ),
    );
    b.chain(&premises, target);
    Ok(b.finish())
}

/// GL^■ proof of `■(■φ → φ) → ■φ` from bsq1 to bsq3 and Löb for `[0]`.
pub fn derive_blacksquare_lob(phi: &Formula) -> Result<Proof, DeriveError> {
    let mut bad = false;
    phi.for_each_label(&mut |l| {
        bad |= !label_in_system(&AxiomSystem::GlBlackSquare, l);
    });
    if bad {
        return Err(DeriveError::Language {
            system: AxiomSystem::GlBlackSquare.to_string(),
            formula: phi.to_string(),
        });
    }
    let zero = Ordinal::zero();
    let mut b = ProofBuilder::new(AxiomSystem::GlBlackSquare);
    let bphi = Formula::black(phi.clone());
    let loop_ = Formula::imp(bphi.clone(), phi.clone());
    let bloop = Formula::black(loop_.clone());
    let chi = Formula::imp(bloop.clone(), bphi.clone());
    let s3 = b.bsq3(loop_);
    let s1 = b.bsq1(chi.clone());
    let s2a = b.bsq2(bloop, bphi.clone());
    let s2b = b.bsq2(bphi, phi.clone());
    let step = b.chain(
        &[s3, s1, s2a, s2b],
        Formula::imp(Formula::boxed(zero.clone(), chi.clone()), chi.clone()),
    );
    let nec = b.nec(zero.clone(), step);
    let lob = b.lob(&zero, chi);
    let boxed = b.mp(lob, nec);
    b.mp(step, boxed);
    Ok(b.finish())
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProofParseError {
    #[error("proof file is empty")]
    Empty,
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Formula {
        line: usize,
        #[source]
        source: SyntaxError,
    },
}

/// Renders a proof in the line-oriented file format.
pub fn print_proof(p: &Proof) -> String {
    let mut out = format!("system: {}\n", p.system);
    for (i, line) in p.lines.iter().enumerate() {
        out.push_str(&format!("{}: {} ; {}\n", i + 1, line.formula, line.justification));
    }
    out
}

/// Parses the line-oriented proof format. Blank lines and lines starting with
/// `//` are ignored. Without a `system:` header the system is inferred: GL^■
/// if `#` or a bsq rule occurs, otherwise GLP capped just above the largest
/// label used.
pub fn parse_proof(text: &str) -> Result<Proof, ProofParseError> {
    let mut system = None;
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let err = |msg: String| ProofParseError::Line { line: lineno, msg };
        let s = raw.trim();
        if s.is_empty() || s.starts_with("//") {
            continue;
        }
        if let Some(rest) = s.strip_prefix("system:") {
            if system.is_some() || !lines.is_empty() {
                return Err(err("system header must come first and only once".into()));
            }
            system = Some(parse_system(rest.trim()).map_err(err)?);
            continue;
        }
        let (num, rest) = s
            .split_once(':')
            .ok_or_else(|| err("expected `n: formula ; justification`".into()))?;
        let num: usize = num
            .trim()
            .parse()
            .map_err(|_| err(format!("bad line number `{}`", num.trim())))?;
        if num != lines.len() + 1 {
            return Err(err(format!(
                "line number {num} out of sequence, expected {}",
                lines.len() + 1
            )));
        }
        let (formula, just) = rest
            .rsplit_once(';')
            .ok_or_else(|| err("missing `; justification`".into()))?;
        let formula = Formula::parse(formula.trim()).map_err(|source| ProofParseError::Formula {
            line: lineno,
            source,
        })?;
        let justification = parse_justification(just.trim()).map_err(err)?;
        lines.push(ProofLine {
            formula,
            justification,
        });
    }
    if lines.is_empty() {
        return Err(ProofParseError::Empty);
    }
    let system = system.unwrap_or_else(|| infer_system(&lines));
    Ok(Proof { system, lines })
}

fn infer_system(lines: &[ProofLine]) -> AxiomSystem {
    let black = lines.iter().any(|l| {
        l.formula.has_black_square()
            || matches!(
                l.justification,
                Justification::BSq1
                    | Justification::BSq2
                    | Justification::BSq3
                    | Justification::Nec(ModalLabel::BlackSquare, _)
            )
    });
    if black {
        return AxiomSystem::GlBlackSquare;
    }
    let tmp = Proof {
        system: AxiomSystem::Glp {
            cap: Ordinal::zero(),
        },
        lines: lines.to_vec(),
    };
    let cap = proof_labels(&tmp)
        .into_iter()
        .next_back()
        .map(|m| m.succ())
        .unwrap_or_else(Ordinal::one);
    AxiomSystem::Glp { cap }
}

fn parse_system(s: &str) -> Result<AxiomSystem, String> {
    let words: Vec<&str> = s.split_whitespace().collect();
    match words.as_slice() {
        ["gl-box"] => Ok(AxiomSystem::GlBlackSquare),
        ["glp", cap] => Ok(AxiomSystem::Glp {
            cap: Ordinal::parse(cap).map_err(|e| format!("system cap: {e}"))?,
        }),
        _ => Err(format!("unknown system `{s}` (expected `glp <cap>` or `gl-box`)")),
    }
}

fn parse_justification(s: &str) -> Result<Justification, String> {
    let words: Vec<&str> = s.split_whitespace().collect();
    let ord = |w: &str| Ordinal::parse(w).map_err(|e| format!("ordinal `{w}`: {e}"));
    let idx = |w: &str| {
        w.parse::<usize>()
            .map_err(|_| format!("bad line reference `{w}`"))
    };
    let label = |w: &str| -> Result<ModalLabel, String> {
        if w == "#" {
            Ok(ModalLabel::BlackSquare)
        } else {
            ord(w).map(ModalLabel::Ord)
        }
    };
    Ok(match words.as_slice() {
        ["taut"] => Justification::Taut,
        ["K", o] => Justification::AxDistrib(ord(o)?),
        ["4", o] => Justification::AxTrans(ord(o)?),
        ["lob", o] => Justification::AxLob(ord(o)?),
        ["diamono", a, b] => Justification::AxDiaMono(ord(a)?, ord(b)?),
        ["intro", a, b] => Justification::AxIntrospect(ord(a)?, ord(b)?),
        ["bsq1"] => Justification::BSq1,
        ["bsq2"] => Justification::BSq2,
        ["bsq3"] => Justification::BSq3,
        ["mp", i, j] => Justification::MP(idx(i)?, idx(j)?),
        ["nec", l, i] => Justification::Nec(label(l)?, idx(i)?),
        _ => return Err(format!("unknown justification `{s}`")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Formula {
        Formula::parse(s).unwrap()
    }

    fn o(s: &str) -> Ordinal {
        Ordinal::parse(s).unwrap()
    }

    fn glp(cap: &str) -> AxiomSystem {
        AxiomSystem::Glp { cap: o(cap) }
    }

    #[test]
    fn tautology_examples() {
        assert_eq!(is_tautology(&f("[1]p -> [1]p")), Ok(true));
        assert_eq!(is_tautology(&f("[1]p -> [2]p")), Ok(false));
        assert_eq!(is_tautology(&f("((p->q)->p)->p")), Ok(true));
        assert_eq!(is_tautology(&f("p | ~p")), Ok(true));
        assert_eq!(is_tautology(&f("p")), Ok(false));
        assert_eq!(is_tautology(&f("T")), Ok(true));
        assert_eq!(is_tautology(&f("F")), Ok(false));
        assert_eq!(is_tautology(&f("(p <-> q) <-> (q <-> p)")), Ok(true));
    }

    #[test]
    fn tautology_across_block_boundary() {
        // eight atoms exercise the multi-block path
        let many = "(a&b&c&d&e&g&h&k) -> (k&h&g&e&d&c&b&a)";
        assert_eq!(is_tautology(&f(many)), Ok(true));
        let wrong = "(a&b&c&d&e&g&h) -> k";
        assert_eq!(is_tautology(&f(wrong)), Ok(false));
        let only_high = "a|b|c|d|e|g|h|~k";
        assert_eq!(is_tautology(&f(only_high)), Ok(false));
    }

    #[test]
    fn too_many_atoms() {
        let names: Vec<String> = (0..25).map(|i| format!("p{i}")).collect();
        let text = names.join(" | ");
        assert_eq!(
            is_tautology(&f(&text)),
            Err(TautologyError::TooManyAtoms(25))
        );
    }

    #[test]
    fn check_examples() {
        let bad = Proof::new(glp("1"), vec![(f("[0](p->p)"), Justification::Taut)]);
        assert_eq!(check_proof(&bad).unwrap_err().line, 1);
        let good = Proof::new(
            glp("1"),
            vec![
                (f("p->p"), Justification::Taut),
                (f("[0](p->p)"), Justification::Nec(o("0").into(), 1)),
            ],
        );
        assert!(check_proof(&good).is_ok());
        let backwards = Proof::new(
            glp("3"),
            vec![(
                f("<2>p -> [1]<2>p"),
                Justification::AxIntrospect(o("2"), o("1")),
            )],
        );
        assert!(matches!(
            check_proof(&backwards).unwrap_err().fault,
            LineFault::LabelOrder { .. }
        ));
        let forwards = Proof::new(
            glp("3"),
            vec![(
                f("<1>p -> [2]<1>p"),
                Justification::AxIntrospect(o("1"), o("2")),
            )],
        );
        assert!(check_proof(&forwards).is_ok());
    }

    #[test]
    fn schema_matching() {
        let cases = [
            ("[1](p->q) -> ([1]p -> [1]q)", Justification::AxDistrib(o("1")), true),
            ("[1](p->q) -> ([1]p -> [0]q)", Justification::AxDistrib(o("1")), false),
            ("[0]p -> [0][0]p", Justification::AxTrans(o("0")), true),
            ("[0]p -> [0][1]p", Justification::AxTrans(o("0")), false),
            ("[2]([2]p -> p) -> [2]p", Justification::AxLob(o("2")), true),
            ("[2]([2]p -> q) -> [2]p", Justification::AxLob(o("2")), false),
            ("<2>p -> <0>p", Justification::AxDiaMono(o("0"), o("2")), true),
            ("<0>p -> <2>p", Justification::AxDiaMono(o("0"), o("2")), false),
        ];
        for (text, just, ok) in cases {
            let p = Proof::new(glp("3"), vec![(f(text), just)]);
            assert_eq!(check_proof(&p).is_ok(), ok, "{text}");
        }
    }

    #[test]
    fn indices_and_systems() {
        let p = Proof::new(
            glp("1"),
            vec![
                (f("p->p"), Justification::Taut),
                (f("p"), Justification::MP(1, 3)),
            ],
        );
        assert!(matches!(
            check_proof(&p).unwrap_err().fault,
            LineFault::BadIndex { index: 3 }
        ));
        let self_ref = Proof::new(glp("1"), vec![(f("p->p"), Justification::MP(1, 1))]);
        assert!(check_proof(&self_ref).is_err());
        let label_too_big = Proof::new(glp("1"), vec![(f("[1]p -> [1]p"), Justification::Taut)]);
        assert!(matches!(
            check_proof(&label_too_big).unwrap_err().fault,
            LineFault::LabelNotAllowed { .. }
        ));
        let bsq_in_glp = Proof::new(glp("1"), vec![(f("[0]p -> #p"), Justification::BSq1)]);
        assert!(check_proof(&bsq_in_glp).is_err());
        let bsq = Proof::new(
            AxiomSystem::GlBlackSquare,
            vec![(f("[0]p -> #p"), Justification::BSq1)],
        );
        assert!(check_proof(&bsq).is_ok());
        let lob_black = Proof::new(
            AxiomSystem::GlBlackSquare,
            vec![(f("[1]([1]p -> p) -> [1]p"), Justification::AxLob(o("1")))],
        );
        assert!(check_proof(&lob_black).is_err());
        assert_eq!(
            check_proof(&Proof::new(glp("1"), vec![])).unwrap_err().fault,
            LineFault::Empty
        );
    }

    #[test]
    fn constructors_check() {
        for (a, b) in [("1", "0"), ("w", "2"), ("w+1", "w"), ("3", "1")] {
            let p = derive_cons_provable(&o(a), &o(b)).unwrap();
            check_proof(&p).unwrap();
            let want = Formula::boxed(o(a), Formula::diamond(o(b), Formula::Top));
            assert_eq!(p.conclusion(), Some(&want));
        }
        assert!(derive_cons_provable(&o("0"), &o("0")).is_err());
        for (a, b, phi) in [("1", "0", "p"), ("w", "1", "[0]q"), ("2", "1", "<1>p & q")] {
            let p = derive_cons_absorption(&o(a), &o(b), &f(phi)).unwrap();
            check_proof(&p).unwrap();
        }
        assert!(derive_cons_absorption(&o("1"), &o("1"), &f("p")).is_err());
        for (a, b) in [("1", "1"), ("2", "1"), ("w", "w"), ("w", "3")] {
            let p = derive_box_disjunction(&o(a), &o(b), &f("p"), &f("q")).unwrap();
            check_proof(&p).unwrap();
        }
        assert!(derive_box_disjunction(&o("1"), &o("0"), &f("p"), &f("q")).is_err());
        assert!(derive_box_disjunction(&o("1"), &o("2"), &f("p"), &f("q")).is_err());
        for phi in ["p", "F", "#q", "[0]p -> #p"] {
            let p = derive_blacksquare_lob(&f(phi)).unwrap();
            check_proof(&p).unwrap();
            let fp = f(phi);
            let bp = Formula::black(fp.clone());
            let want = Formula::imp(Formula::black(Formula::imp(bp.clone(), fp)), bp);
            assert_eq!(p.conclusion(), Some(&want));
        }
        assert!(derive_blacksquare_lob(&f("[1]p")).is_err());
    }

    #[test]
    fn conservativity_examples() {
        let p = derive_cons_provable(&o("1"), &o("0")).unwrap();
        assert_eq!(conservativity_scan(&p, &o("2")), Ok(true));
        assert_eq!(conservativity_scan(&p, &o("1")), Ok(false));
        let q = derive_blacksquare_lob(&f("p")).unwrap();
        assert!(conservativity_scan(&q, &o("1")).is_err());
    }

    #[test]
    fn text_round_trip() {
        let p = derive_box_disjunction(&o("2"), &o("1"), &f("p"), &f("q")).unwrap();
        let back = parse_proof(&print_proof(&p)).unwrap();
        assert_eq!(back, p);
        let q = derive_blacksquare_lob(&f("#q")).unwrap();
        let text = print_proof(&q);
        let stripped: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
        assert_eq!(parse_proof(&stripped).unwrap(), q);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(parse_proof(""), Err(ProofParseError::Empty));
        assert_eq!(parse_proof("\n// nothing\n"), Err(ProofParseError::Empty));
        assert!(matches!(
            parse_proof("2: p -> p ; taut"),
            Err(ProofParseError::Line { line: 1, .. })
        ));
        assert!(matches!(
            parse_proof("1: p -> ; taut"),
            Err(ProofParseError::Formula { line: 1, .. })
        ));
        assert!(matches!(
            parse_proof("1: p -> p ; magic"),
            Err(ProofParseError::Line { line: 1, .. })
        ));
        let inferred = parse_proof("1: p->p ; taut\n2: [w](p->p) ; nec w 1\n").unwrap();
        assert_eq!(inferred.system, glp("w+1"));
        assert!(check_proof(&inferred).is_ok());
    }
}
