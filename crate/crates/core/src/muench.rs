//! Münchhausen provability operators over a finite frame algebra.
//!
//! Level `ζ` of the single-oracle predicate is
//! `[ζ]x = box(x) ∨ ⋁ { d ∧ box(d → x) | d = ⟨ξ⟩ψ, ξ ≺ ζ in the grid, ψ ∈ U }`.
//! The vector predicate uses the same clause with `d` ranging over finite
//! meets of such diamonds. Both are built bottom-up along the grid.
//!
//! Per world the oracle clause reads: `w ∈ d ∧ box(d → x)` iff `w ∈ d` and
//! `d ∩ R(w) ⊆ x`. So each world only needs the minimal traces `d ∩ R(w)` of
//! the diamonds it lies in, and the vector closure at `w` is the closure of
//! those traces under intersection.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, Element, Frame, Sampling};
use crate::ordinals::{check_order_requirements, Ordinal, OrdinalGrid};
use crate::syntax::{Formula, ModalLabel};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MuenchError {
    #[error("grid {0} violates the order requirements")]
    Grid(String),
    #[error("oracle universe is empty")]
    EmptyUniverse,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("level {0} is not a grid point")]
    LevelNotInGrid(Ordinal),
    #[error("max_len must be at least 1")]
    MaxLenZero,
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("operation needs a {0} predicate")]
    WrongMode(Mode),
    #[error("oracle universe is not closed under negation")]
    NotNegationClosed,
    #[error("atom `{0}` has no value in the realization")]
    UnboundAtom(String),
    #[error("`#` has no interpreting level in this realization")]
    UnboundBlackSquare,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Single,
    Vector,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Single => "single",
            Mode::Vector => "vector",
        })
    }
}

/// Candidate oracle sentences ψ, in a fixed order (ids index this list).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleUniverse {
    width: usize,
    elements: Vec<Element>,
}

impl OracleUniverse {
    /// Every element of the frame's algebra, in bit order.
    pub fn full(frame: &Frame) -> Self {
        OracleUniverse {
            width: frame.worlds(),
            elements: frame.elements().collect(),
        }
    }

    /// A listed universe; duplicates are dropped, first occurrence kept.
    pub fn new(frame: &Frame, elements: Vec<Element>) -> Result<Self, MuenchError> {
        let mut seen = vec![false; frame.algebra_size()];
        let mut out = Vec::new();
        for e in elements {
            frame.owns(e)?;
            if !seen[e.bits() as usize] {
                seen[e.bits() as usize] = true;
                out.push(e);
            }
        }
        if out.is_empty() {
            return Err(MuenchError::EmptyUniverse);
        }
        Ok(OracleUniverse {
            width: frame.worlds(),
            elements: out,
        })
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.elements.len() == 1 << self.width
    }

    pub fn index_of(&self, x: Element) -> Option<usize> {
        self.elements.iter().position(|&e| e == x)
    }

    pub fn contains(&self, x: Element) -> bool {
        self.index_of(x).is_some()
    }

    pub fn is_closed_under_negation(&self) -> bool {
        self.elements.iter().all(|&e| self.contains(!e))
    }
}

/// The operators `[ζ]` for every grid point, as full tables.
#[derive(Clone, Debug)]
pub struct LevelledPredicate {
    frame: Frame,
    grid: OrdinalGrid,
    universe: OracleUniverse,
    mode: Mode,
    max_len: Option<usize>,
    tables: Vec<Vec<u16>>,
    stabilization_index: Option<usize>,
}

impl LevelledPredicate {
    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn grid(&self) -> &OrdinalGrid {
        &self.grid
    }

    pub fn universe(&self) -> &OracleUniverse {
        &self.universe
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Sequence-length bound of a vector predicate; `None` means unbounded.
    pub fn max_len(&self) -> Option<usize> {
        self.max_len
    }

    pub fn levels(&self) -> usize {
        self.tables.len()
    }

    /// `[ζ]` as a map from element bits to element bits, for grid index `level`.
    pub fn table(&self, level: usize) -> &[u16] {
        &self.tables[level]
    }

    pub fn level_index(&self, o: &Ordinal) -> Result<usize, MuenchError> {
        self.grid
            .index_of(o)
            .ok_or_else(|| MuenchError::LevelNotInGrid(o.clone()))
    }

    pub fn apply(&self, level: usize, x: Element) -> Element {
        debug_assert_eq!(x.width(), self.frame.worlds());
        Element::new(self.tables[level][x.bits() as usize], self.frame.worlds())
            .expect("table entries stay inside the frame")
    }

    pub fn apply_at(&self, o: &Ordinal, x: Element) -> Result<Element, MuenchError> {
        self.frame.owns(x)?;
        Ok(self.apply(self.level_index(o)?, x))
    }

    /// `⟨ζ⟩x = ¬[ζ]¬x`.
    pub fn diamond(&self, level: usize, x: Element) -> Element {
        !self.apply(level, !x)
    }

    /// `⟨ζ⟩⊤`, the worlds where level `ζ` is consistent.
    pub fn consistency(&self, level: usize) -> Element {
        self.diamond(level, self.frame.top())
    }

    /// Grid index from which all tables coincide, if witnessed.
    pub fn stabilization_index(&self) -> Option<usize> {
        self.stabilization_index
    }

    /// True when the vector closure is exact: sequences of at most `n`
    /// diamonds already realise every finite meet on an `n`-world frame.
    pub fn is_saturated(&self) -> bool {
        self.mode == Mode::Vector && self.max_len.is_none_or(|k| k >= self.frame.worlds())
    }
}

fn validate(frame: &Frame, grid: &OrdinalGrid, u: &OracleUniverse) -> Result<(), MuenchError> {
    if !check_order_requirements(grid) {
        return Err(MuenchError::Grid(grid.to_string()));
    }
    if u.is_empty() {
        return Err(MuenchError::EmptyUniverse);
    }
    if u.width != frame.worlds() {
        return Err(MuenchError::Algebra(AlgebraError::FrameMismatch {
            expected: frame.worlds(),
            found: u.width,
        }));
    }
    Ok(())
}

/// Single-oracle predicate over `grid`.
pub fn eval_single(
    frame: &Frame,
    grid: &OrdinalGrid,
    universe: &OracleUniverse,
) -> Result<LevelledPredicate, MuenchError> {
    validate(frame, grid, universe)?;
    Ok(build(frame, grid, universe, Mode::Single, Some(1)))
}

/// Vector predicate over `grid`; `max_len = None` allows sequences of any
/// finite length.
pub fn eval_vector(
    frame: &Frame,
    grid: &OrdinalGrid,
    universe: &OracleUniverse,
    max_len: Option<usize>,
) -> Result<LevelledPredicate, MuenchError> {
    validate(frame, grid, universe)?;
    if max_len == Some(0) {
        return Err(MuenchError::MaxLenZero);
    }
    Ok(build(frame, grid, universe, Mode::Vector, max_len))
}

fn build(
    frame: &Frame,
    grid: &OrdinalGrid,
    universe: &OracleUniverse,
    mode: Mode,
    max_len: Option<usize>,
) -> LevelledPredicate {
    let n = frame.worlds();
    let size = frame.algebra_size();
    let full = (size - 1) as u16;
    let mut tables: Vec<Vec<u16>> = Vec::with_capacity(grid.len());
    let mut seen = vec![false; size];
    let mut diamonds: Vec<u16> = Vec::new();
    for level in 0..grid.len() {
        if level > 0 {
            let below = &tables[level - 1];
            for psi in universe.elements() {
                let d = !below[(!psi.bits() & full) as usize] & full;
                if !seen[d as usize] {
                    seen[d as usize] = true;
                    diamonds.push(d);
                }
            }
        }
        let bound = match mode {
            Mode::Single => Some(1),
            Mode::Vector => max_len,
        };
        let traces: Vec<Vec<u16>> = (0..n)
            .map(|w| world_traces(frame, w, &diamonds, bound))
            .collect();
        tables.push(table_from_traces(frame, &traces));
    }
    let stabilization_index = stabilization_of(&tables);
    LevelledPredicate {
        frame: frame.clone(),
        grid: grid.clone(),
        universe: universe.clone(),
        mode,
        max_len,
        tables,
        stabilization_index,
    }
}

/// Minimal sets `m ⊆ R(w)` such that `m ⊆ x` puts `w` into the level's
/// operator applied to `x`. `R(w)` itself is always a trace (the box case).
fn world_traces(frame: &Frame, w: usize, diamonds: &[u16], bound: Option<usize>) -> Vec<u16> {
    let r = frame.successors(w).bits();
    let mut base: Vec<u16> = vec![r];
    base.extend(
        diamonds
            .iter()
            .filter(|&&d| d & (1 << w) != 0)
            .map(|&d| d & r),
    );
    let singles = minimal(base);
    match bound {
        Some(1) => singles,
        None => vec![singles.iter().fold(r, |acc, &m| acc & m)],
        Some(k) => {
            let mut cur = singles.clone();
            for _ in 1..k {
                let mut next = cur.clone();
                for &a in &cur {
                    for &b in &singles {
                        next.push(a & b);
                    }
                }
                let next = minimal(next);
                if next == cur {
                    break;
                }
                cur = next;
            }
            cur
        }
    }
}

fn minimal(mut sets: Vec<u16>) -> Vec<u16> {
    sets.sort_by_key(|s| (s.count_ones(), *s));
    sets.dedup();
    let mut out: Vec<u16> = Vec::new();
    for s in sets {
        if !out.iter().any(|&m| m & !s == 0) {
            out.push(s);
        }
    }
    out.sort_unstable();
    out
}

fn table_from_traces(frame: &Frame, traces: &[Vec<u16>]) -> Vec<u16> {
    let n = frame.worlds();
    let size = frame.algebra_size();
    let mut table = vec![0u16; size];
    for (w, ms) in traces.iter().enumerate() {
        let r = frame.successors(w).bits();
        let positions: Vec<usize> = (0..n).filter(|&v| r & (1 << v) != 0).collect();
        let k = positions.len();
        let compress = |x: u16| -> usize {
            positions
                .iter()
                .enumerate()
                .fold(0usize, |acc, (i, &v)| acc | (((x >> v) & 1) as usize) << i)
        };
        // good[s]: some trace lies inside the compressed subset s of R(w)
        let mut good = vec![false; 1 << k];
        for &m in ms {
            good[compress(m)] = true;
        }
        for i in 0..k {
            for s in 0..(1usize << k) {
                if s & (1 << i) != 0 && good[s ^ (1 << i)] {
                    good[s] = true;
                }
            }
        }
        for (x, out) in table.iter_mut().enumerate() {
            if good[compress(x as u16)] {
                *out |= 1 << w;
            }
        }
    }
    table
}

fn stabilization_of(tables: &[Vec<u16>]) -> Option<usize> {
    if tables.len() < 2 {
        return None;
    }
    let last = tables.len() - 1;
    if tables[last - 1] != tables[last] {
        return None;
    }
    let mut i = last - 1;
    while i > 0 && tables[i - 1] == tables[last] {
        i -= 1;
    }
    Some(i)
}

/// Grid point from which the predicate's tables are constant, if the grid
/// witnesses two equal consecutive tables.
pub fn stabilize(p: &LevelledPredicate) -> Option<Ordinal> {
    p.stabilization_index
        .map(|i| p.grid.points()[i].clone())
}

/// Vector predicate by literal enumeration of oracle sequences of length at
/// most `max_len`, over its own recursion. Kept as a cross-check.
pub fn eval_vector_enumerated(
    frame: &Frame,
    grid: &OrdinalGrid,
    universe: &OracleUniverse,
    max_len: usize,
) -> Result<Vec<Vec<u16>>, MuenchError> {
    validate(frame, grid, universe)?;
    if max_len == 0 {
        return Err(MuenchError::MaxLenZero);
    }
    let pool = (grid.len().saturating_sub(1) * universe.len()) as f64;
    if pool.powi(max_len as i32) > 5e6 {
        return Err(MuenchError::TooLarge(format!(
            "{pool} oracle pairs to the power {max_len}"
        )));
    }
    let mut tables: Vec<Vec<Element>> = Vec::new();
    for level in 0..grid.len() {
        let pairs: Vec<(usize, Element)> = (0..level)
            .flat_map(|b| universe.elements().iter().map(move |&psi| (b, psi)))
            .collect();
        let diamond = |b: usize, psi: Element, tables: &Vec<Vec<Element>>| {
            !tables[b][(!psi).bits() as usize]
        };
        let mut row: Vec<Element> = frame.elements().map(|x| frame.box_op(x)).collect();
        let mut seq: Vec<usize> = Vec::new();
        for len in 1..=max_len {
            if pairs.is_empty() {
                break;
            }
            seq.clear();
            seq.resize(len, 0);
            loop {
                let d = seq.iter().fold(frame.top(), |acc, &i| {
                    let (b, psi) = pairs[i];
                    acc & diamond(b, psi, &tables)
                });
                for x in frame.elements() {
                    let gain = d & frame.box_op(d.implies(x));
                    let cell = &mut row[x.bits() as usize];
                    *cell = *cell | gain;
                }
                if !advance(&mut seq, pairs.len()) {
                    break;
                }
            }
        }
        tables.push(row);
    }
    Ok(tables
        .into_iter()
        .map(|row| row.into_iter().map(Element::bits).collect())
        .collect())
}

fn advance(seq: &mut [usize], base: usize) -> bool {
    for digit in seq.iter_mut() {
        *digit += 1;
        if *digit < base {
            return true;
        }
        *digit = 0;
    }
    false
}

/// Level `n` of the finite-level definition
/// `⌈0⌉x = box x`, `⌈m+1⌉x = box x ∨ ⋁_{j ≤ m} ⋁_ψ (⟨j⟩ψ ∧ box(⟨j⟩ψ → x))`,
/// computed directly with whole-element operations.
pub fn finite_level_boxbox(
    frame: &Frame,
    n: usize,
    universe: &OracleUniverse,
) -> Result<Vec<u16>, MuenchError> {
    if universe.is_empty() {
        return Err(MuenchError::EmptyUniverse);
    }
    let mut levels: Vec<Vec<Element>> = vec![frame.elements().map(|x| frame.box_op(x)).collect()];
    for _ in 0..n {
        let mut row: Vec<Element> = frame.elements().map(|x| frame.box_op(x)).collect();
        for below in &levels {
            for &psi in universe.elements() {
                let d = !below[(!psi).bits() as usize];
                for x in frame.elements() {
                    let cell = &mut row[x.bits() as usize];
                    *cell = *cell | (d & frame.box_op(d.implies(x)));
                }
            }
        }
        levels.push(row);
    }
    Ok(levels[n].iter().map(|e| e.bits()).collect())
}

/// Verdict on one law at one level (or level pair).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawRecord {
    pub law: String,
    pub mode: Mode,
    pub level: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_level: Option<String>,
    pub witness_x: Option<u16>,
    pub witness_y: Option<u16>,
    pub holds: bool,
    pub asserted: bool,
    pub instances: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub worlds: usize,
    pub grid: String,
    pub mode: Mode,
    pub records: Vec<LawRecord>,
}

impl SuiteReport {
    pub fn asserted_failures(&self) -> Vec<&LawRecord> {
        self.records
            .iter()
            .filter(|r| r.asserted && !r.holds)
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.asserted_failures().is_empty()
    }

    /// Verdict of a law across all levels, if it was checked.
    pub fn law_holds(&self, law: &str) -> Option<bool> {
        let mut any = false;
        let mut all = true;
        for r in self.records.iter().filter(|r| r.law == law) {
            any = true;
            all &= r.holds;
        }
        any.then_some(all)
    }
}

pub const LAW_EX_FALSO: &str = "ex_falso";
pub const LAW_K_MONO: &str = "k_monotonicity";
pub const LAW_LEVEL_MONO: &str = "level_monotonicity";
pub const LAW_DIA_MONO: &str = "diamond_monotonicity";
pub const LAW_INTROSPECTION: &str = "negative_introspection";
pub const LAW_NECESSITATION: &str = "necessitation";
pub const LAW_DISTRIBUTION: &str = "distribution";
pub const LAW_CONJUNCTION: &str = "conjunction_closure";
pub const LAW_TRANSITIVITY: &str = "transitivity";
pub const LAW_LOB: &str = "lob";
pub const LAW_WEAK_DISJUNCTION: &str = "weak_disjunction_closure";

/// Laws that follow from the defining recursion alone, in either mode.
pub const DEFINITIONAL_LAWS: [&str; 6] = [
    LAW_EX_FALSO,
    LAW_K_MONO,
    LAW_LEVEL_MONO,
    LAW_DIA_MONO,
    LAW_INTROSPECTION,
    LAW_NECESSITATION,
];

/// Laws asserted for a saturated vector predicate on top of the
/// definitional ones.
pub const VECTOR_LAWS: [&str; 4] = [LAW_DISTRIBUTION, LAW_CONJUNCTION, LAW_TRANSITIVITY, LAW_LOB];

fn is_asserted(p: &LevelledPredicate, law: &str) -> bool {
    if DEFINITIONAL_LAWS.contains(&law) {
        return true;
    }
    VECTOR_LAWS.contains(&law) && p.is_saturated()
}

struct Tally {
    law: &'static str,
    level: usize,
    lower: Option<usize>,
    witness: Option<(Element, Option<Element>)>,
    instances: u64,
}

impl Tally {
    fn new(law: &'static str, level: usize, lower: Option<usize>) -> Self {
        Tally {
            law,
            level,
            lower,
            witness: None,
            instances: 0,
        }
    }

    fn check(&mut self, ok: bool, x: Element, y: Option<Element>) {
        self.instances += 1;
        if !ok && self.witness.is_none() {
            self.witness = Some((x, y));
        }
    }

    fn record(self, p: &LevelledPredicate) -> LawRecord {
        let pts = p.grid.points();
        LawRecord {
            law: self.law.to_string(),
            mode: p.mode,
            level: pts[self.level].to_string(),
            lower_level: self.lower.map(|l| pts[l].to_string()),
            witness_x: self.witness.map(|(x, _)| x.bits()),
            witness_y: self.witness.and_then(|(_, y)| y.map(Element::bits)),
            holds: self.witness.is_none(),
            asserted: is_asserted(p, self.law),
            instances: self.instances,
        }
    }
}

/// Sweeps every law over every level (and level pair) of `p`.
pub fn soundness_suite(p: &LevelledPredicate, sampling: Sampling) -> SuiteReport {
    let f = &p.frame;
    let top = f.top();
    let bot = f.bottom();
    let pairs = sampling.pairs(f);
    let singles = sampling.singles(f);
    let mut records = Vec::new();
    let image_of = |z: usize| {
        let mut img = vec![false; f.algebra_size()];
        for &v in p.table(z) {
            img[v as usize] = true;
        }
        img
    };
    for z in 0..p.levels() {
        let b = |x: Element| p.apply(z, x);
        let image = image_of(z);
        let mut ex = Tally::new(LAW_EX_FALSO, z, None);
        let mut km = Tally::new(LAW_K_MONO, z, None);
        let mut nec = Tally::new(LAW_NECESSITATION, z, None);
        let mut dist = Tally::new(LAW_DISTRIBUTION, z, None);
        let mut conj = Tally::new(LAW_CONJUNCTION, z, None);
        let mut trans = Tally::new(LAW_TRANSITIVITY, z, None);
        let mut lob = Tally::new(LAW_LOB, z, None);
        let mut wdis = Tally::new(LAW_WEAK_DISJUNCTION, z, None);
        nec.check(b(top) == top, top, None);
        for &x in &singles {
            ex.check(b(bot).le(b(x)), x, None);
            trans.check(b(x).le(b(b(x))), x, None);
            lob.check(b(b(x).implies(x)).le(b(x)), x, None);
        }
        for &(x, y) in &pairs {
            km.check((b(x) & f.box_op(x.implies(y))).le(b(y)), x, Some(y));
            dist.check((b(x.implies(y)) & b(x)).le(b(y)), x, Some(y));
            conj.check((b(x) & b(y)) == b(x & y), x, Some(y));
            wdis.check(image[(b(x) | b(y)).bits() as usize], x, Some(y));
        }
        for t in [ex, km, nec, dist, conj, trans, lob, wdis] {
            records.push(t.record(p));
        }
        for lo in 0..z {
            let mut lm = Tally::new(LAW_LEVEL_MONO, z, Some(lo));
            let mut dm = Tally::new(LAW_DIA_MONO, z, Some(lo));
            let mut intro = Tally::new(LAW_INTROSPECTION, z, Some(lo));
            for &x in &singles {
                lm.check(p.apply(lo, x).le(b(x)), x, None);
                dm.check(p.diamond(z, x).le(p.diamond(lo, x)), x, None);
            }
            for &x in p.universe.elements() {
                let d = p.diamond(lo, x);
                intro.check(d.le(b(d)), x, None);
            }
            for t in [lm, dm, intro] {
                records.push(t.record(p));
            }
        }
    }
    SuiteReport {
        worlds: f.worlds(),
        grid: p.grid.to_string(),
        mode: p.mode,
        records,
    }
}

/// Premise and conclusion of one induction instance, each rendered as
/// "the element is ⊤".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InductionInstance {
    pub premise: bool,
    pub conclusion: bool,
}

impl InductionInstance {
    /// The rule instance holds unless the premise holds and the conclusion fails.
    pub fn holds(&self) -> bool {
        !self.premise || self.conclusion
    }
}

fn induction_inputs(frame: &Frame, grid: &OrdinalGrid, phi: &[Element]) -> Result<(), MuenchError> {
    if phi.len() != grid.len() {
        return Err(MuenchError::TooLarge(format!(
            "assignment has {} values for a grid of {} points",
            phi.len(),
            grid.len()
        )));
    }
    for &x in phi {
        frame.owns(x)?;
    }
    Ok(())
}

/// Reflexive induction: from `⋀_α (box(⋀_{β≺α} φ(β)) → φ(α)) = ⊤`
/// conclude `⋀_α φ(α) = ⊤`.
pub fn reflexive_induction_check(
    frame: &Frame,
    grid: &OrdinalGrid,
    phi: &[Element],
) -> Result<InductionInstance, MuenchError> {
    induction_inputs(frame, grid, phi)?;
    let mut premise = frame.top();
    let mut below = frame.top();
    for &v in phi {
        premise = premise & frame.box_op(below).implies(v);
        below = below & v;
    }
    Ok(InductionInstance {
        premise: premise.is_top(),
        conclusion: below.is_top(),
    })
}

/// Transfinite reflexive induction: the step may also use the unboxed
/// hypothesis, `⋀_α ((⋀_{β≺α} φ(β) ∧ box(⋀_{β≺α} φ(β))) → φ(α)) = ⊤`.
pub fn transfinite_reflexive_induction_check(
    frame: &Frame,
    grid: &OrdinalGrid,
    phi: &[Element],
) -> Result<InductionInstance, MuenchError> {
    induction_inputs(frame, grid, phi)?;
    let mut premise = frame.top();
    let mut below = frame.top();
    for &v in phi {
        premise = premise & (below & frame.box_op(below)).implies(v);
        below = below & v;
    }
    Ok(InductionInstance {
        premise: premise.is_top(),
        conclusion: below.is_top(),
    })
}

/// The iterated class at one world: pairs `(grid index, universe index)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldClass {
    pub world: usize,
    pub members: Vec<(usize, usize)>,
    pub verified: bool,
    /// Number of candidate classes satisfying the recursion, when brute
    /// force was run.
    pub solutions: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImcReport {
    pub pairs: usize,
    pub classes: Vec<WorldClass>,
}

impl ImcReport {
    pub fn all_verified(&self) -> bool {
        self.classes.iter().all(|c| c.verified)
    }

    pub fn all_unique(&self) -> bool {
        self.classes.iter().all(|c| c.solutions == Some(1))
    }
}

/// Limits for the brute-force uniqueness search.
pub const IMC_MAX_WORLDS: usize = 3;
pub const IMC_MAX_GRID: usize = 3;
pub const IMC_MAX_UNIVERSE: usize = 8;

/// Builds, per world, the class `{(α, ψ) | w ∈ [α]ψ}` of the single-oracle
/// predicate and checks it against the class recursion
/// `(α,φ) ∈ X ↔ w ∈ box φ ∨ ∃β≺α ∃ψ ((β,¬ψ) ∉ X ∧ w ∈ box(⟨β⟩ψ → φ))`.
/// With `brute_force`, every subset of the pair space is tried as well.
pub fn build_imc(
    frame: &Frame,
    grid: &OrdinalGrid,
    universe: &OracleUniverse,
    brute_force: bool,
) -> Result<ImcReport, MuenchError> {
    if !universe.is_closed_under_negation() {
        return Err(MuenchError::NotNegationClosed);
    }
    if brute_force
        && (frame.worlds() > IMC_MAX_WORLDS
            || grid.len() > IMC_MAX_GRID
            || universe.len() > IMC_MAX_UNIVERSE)
    {
        return Err(MuenchError::TooLarge(format!(
            "brute force needs n <= {IMC_MAX_WORLDS}, grid <= {IMC_MAX_GRID}, |U| <= {IMC_MAX_UNIVERSE}"
        )));
    }
    let p = eval_single(frame, grid, universe)?;
    let us = universe.elements();
    let nu = us.len();
    let levels = grid.len();
    let neg: Vec<usize> = us
        .iter()
        .map(|&e| universe.index_of(!e).expect("closed under negation"))
        .collect();
    let bit = |a: usize, i: usize| a * nu + i;
    let mut classes = Vec::new();
    for w in 0..frame.worlds() {
        let boxed: Vec<bool> = us.iter().map(|&e| frame.box_op(e).contains(w)).collect();
        // guard[b][psi][phi]: w ∈ box(⟨b⟩ψ → φ)
        let guard: Vec<Vec<Vec<bool>>> = (0..levels)
            .map(|b| {
                us.iter()
                    .map(|&psi| {
                        let d = p.diamond(b, psi);
                        us.iter()
                            .map(|&phi| frame.box_op(d.implies(phi)).contains(w))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let satisfies = |member: &dyn Fn(usize) -> bool| -> bool {
            for a in 0..levels {
                for phi in 0..nu {
                    let rhs = boxed[phi]
                        || (0..a).any(|b| {
                            (0..nu).any(|psi| !member(bit(b, neg[psi])) && guard[b][psi][phi])
                        });
                    if rhs != member(bit(a, phi)) {
                        return false;
                    }
                }
            }
            true
        };
        let mut members = Vec::new();
        let mut built = vec![false; levels * nu];
        for a in 0..levels {
            for (i, &e) in us.iter().enumerate() {
                if p.apply(a, e).contains(w) {
                    members.push((a, i));
                    built[bit(a, i)] = true;
                }
            }
        }
        let verified = satisfies(&|k| built[k]);
        let solutions = brute_force.then(|| {
            let space = levels * nu;
            (0u64..(1u64 << space))
                .filter(|&cand| satisfies(&|k| cand >> k & 1 == 1))
                .count() as u64
        });
        classes.push(WorldClass {
            world: w,
            members,
            verified,
            solutions,
        });
    }
    Ok(ImcReport {
        pairs: levels * nu,
        classes,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureFailure {
    pub level: String,
    pub x: u16,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<u16>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawFindings {
    pub law: String,
    pub instances: u64,
    pub violations: u64,
    pub examples: Vec<ClosureFailure>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreReport {
    pub worlds: usize,
    pub grid: String,
    pub findings: Vec<LawFindings>,
}

impl ExploreReport {
    pub fn violations(&self, law: &str) -> u64 {
        self.findings
            .iter()
            .filter(|f| f.law == law)
            .map(|f| f.violations)
            .sum()
    }
}

const EXAMPLES_PER_LAW: usize = 8;

/// Exhaustive search for single-oracle conjunction closure, weak disjunction
/// closure and transitivity failures. Records what it finds; asserts nothing.
pub fn explore_closure_failures(p: &LevelledPredicate) -> Result<ExploreReport, MuenchError> {
    if p.mode != Mode::Single {
        return Err(MuenchError::WrongMode(Mode::Single));
    }
    let f = &p.frame;
    let mut conj = LawFindings {
        law: LAW_CONJUNCTION.into(),
        instances: 0,
        violations: 0,
        examples: vec![],
    };
    let mut disj = LawFindings {
        law: LAW_WEAK_DISJUNCTION.into(),
        ..conj.clone()
    };
    let mut trans = LawFindings {
        law: LAW_TRANSITIVITY.into(),
        ..conj.clone()
    };
    let note = |lf: &mut LawFindings, ok: bool, level: &Ordinal, x: Element, y: Option<Element>| {
        lf.instances += 1;
        if !ok {
            lf.violations += 1;
            if lf.examples.len() < EXAMPLES_PER_LAW {
                lf.examples.push(ClosureFailure {
                    level: level.to_string(),
                    x: x.bits(),
                    y: y.map(Element::bits),
                });
            }
        }
    };
    for (z, level) in p.grid.points().iter().enumerate() {
        let mut image = vec![false; f.algebra_size()];
        for &v in p.table(z) {
            image[v as usize] = true;
        }
        let b = |x: Element| p.apply(z, x);
        for x in f.elements() {
            note(&mut trans, b(x).le(b(b(x))), level, x, None);
            for y in f.elements() {
                note(&mut conj, (b(x) & b(y)) == b(x & y), level, x, Some(y));
                note(&mut disj, image[(b(x) | b(y)).bits() as usize], level, x, Some(y));
            }
        }
    }
    Ok(ExploreReport {
        worlds: f.worlds(),
        grid: p.grid.to_string(),
        findings: vec![conj, disj, trans],
    })
}

/// Interprets a formula in the frame algebra: atoms by `valuation`, `[α]` by
/// the predicate's level `α`, and `#` by level `black` when given.
pub fn realize(
    p: &LevelledPredicate,
    f: &Formula,
    valuation: &BTreeMap<String, Element>,
    black: Option<&Ordinal>,
) -> Result<Element, MuenchError> {
    let fr = &p.frame;
    let rec = |g: &Formula| realize(p, g, valuation, black);
    Ok(match f {
        Formula::Atom(a) => *valuation
            .get(a)
            .ok_or_else(|| MuenchError::UnboundAtom(a.clone()))?,
        Formula::Top => fr.top(),
        Formula::Bot => fr.bottom(),
        Formula::Not(a) => !rec(a)?,
        Formula::And(a, b) => rec(a)? & rec(b)?,
        Formula::Or(a, b) => rec(a)? | rec(b)?,
        Formula::Imp(a, b) => rec(a)?.implies(rec(b)?),
        Formula::Iff(a, b) => rec(a)?.iff(rec(b)?),
        Formula::Box(label, a) => {
            let level = match label {
                ModalLabel::Ord(o) => o,
                ModalLabel::BlackSquare => black.ok_or(MuenchError::UnboundBlackSquare)?,
            };
            p.apply_at(level, rec(a)?)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{enumerate_frames, random_frame};

    fn grid(s: &str) -> OrdinalGrid {
        OrdinalGrid::parse(s).unwrap()
    }

    fn box_table(f: &Frame) -> Vec<u16> {
        f.elements().map(|x| f.box_op(x).bits()).collect()
    }

    #[test]
    fn level_zero_is_box() {
        for seed in 0..20 {
            let f = random_frame(seed, 5).unwrap();
            let u = OracleUniverse::full(&f);
            let g = grid("0,1,2");
            assert_eq!(eval_single(&f, &g, &u).unwrap().table(0), box_table(&f));
            assert_eq!(eval_vector(&f, &g, &u, None).unwrap().table(0), box_table(&f));
        }
    }

    #[test]
    fn one_world_is_constant_top() {
        let f = Frame::singleton();
        let p = eval_single(&f, &grid("0,1,2"), &OracleUniverse::full(&f)).unwrap();
        for z in 0..3 {
            assert!(p.table(z).iter().all(|&v| v == 1));
        }
        assert_eq!(stabilize(&p), Some(Ordinal::zero()));
    }

    #[test]
    fn two_chain_level_one() {
        let f = Frame::chain(2).unwrap();
        let p = eval_single(&f, &grid("0,1"), &OracleUniverse::full(&f)).unwrap();
        assert_eq!(p.consistency(0).bits(), 0b10);
        assert!(p.apply(1, f.bottom()).is_top());
    }

    #[test]
    fn three_chain_small_universe() {
        let f = Frame::chain(3).unwrap();
        let full = OracleUniverse::full(&f);
        let p = eval_single(&f, &grid("0,1"), &full).unwrap();
        assert!(p.apply(1, f.bottom()).is_top());
        let u = OracleUniverse::new(&f, vec![f.top()]).unwrap();
        let q = eval_single(&f, &grid("0,1"), &u).unwrap();
        assert_eq!(q.apply(1, f.bottom()).bits(), 0b011);
    }

    #[test]
    fn errors() {
        let f = Frame::chain(2).unwrap();
        let u = OracleUniverse::full(&f);
        let bad = OrdinalGrid::new_unchecked(vec![Ordinal::one()], Ordinal::finite(2));
        assert!(matches!(eval_single(&f, &bad, &u), Err(MuenchError::Grid(_))));
        assert!(matches!(
            eval_vector(&f, &grid("0,1"), &u, Some(0)),
            Err(MuenchError::MaxLenZero)
        ));
        assert!(matches!(
            OracleUniverse::new(&f, vec![]),
            Err(MuenchError::EmptyUniverse)
        ));
        let other = OracleUniverse::full(&Frame::chain(3).unwrap());
        assert!(eval_single(&f, &grid("0,1"), &other).is_err());
    }

    #[test]
    fn max_len_one_matches_single() {
        for f in enumerate_frames(3).unwrap() {
            let u = OracleUniverse::new(&f, f.elements().step_by(3).collect()).unwrap();
            let g = grid("0,1,2");
            let s = eval_single(&f, &g, &u).unwrap();
            let v = eval_vector(&f, &g, &u, Some(1)).unwrap();
            for z in 0..3 {
                assert_eq!(s.table(z), v.table(z));
            }
        }
    }

    #[test]
    fn closure_matches_enumeration_on_two_chain() {
        let f = Frame::chain(2).unwrap();
        let u = OracleUniverse::full(&f);
        let g = grid("0,1,2");
        let v = eval_vector(&f, &g, &u, Some(2)).unwrap();
        let e = eval_vector_enumerated(&f, &g, &u, 2).unwrap();
        for z in 0..3 {
            assert_eq!(v.table(z), e[z].as_slice());
        }
    }

    #[test]
    fn stabilization_examples() {
        let f = Frame::chain(2).unwrap();
        let p = eval_single(&f, &grid("0,1,2,3,4"), &OracleUniverse::full(&f)).unwrap();
        assert!(p.stabilization_index().unwrap() <= 2);
        let q = eval_single(&f, &grid("0"), &OracleUniverse::full(&f)).unwrap();
        assert_eq!(stabilize(&q), None);
    }

    #[test]
    fn boxbox_levels() {
        let f = Frame::chain(2).unwrap();
        let u = OracleUniverse::full(&f);
        assert_eq!(finite_level_boxbox(&f, 0, &u).unwrap(), box_table(&f));
        let p = eval_single(&f, &grid("0,1,2"), &u).unwrap();
        assert_eq!(finite_level_boxbox(&f, 1, &u).unwrap(), p.table(1));
        assert_eq!(finite_level_boxbox(&f, 2, &u).unwrap(), p.table(2));
    }

    #[test]
    fn suites_on_small_frames() {
        for f in enumerate_frames(3).unwrap() {
            let u = OracleUniverse::full(&f);
            let v = eval_vector(&f, &grid("0,1,2"), &u, None).unwrap();
            let r = soundness_suite(&v, Sampling::Exhaustive);
            assert!(r.passed(), "{:?}", r.asserted_failures());
            let s = eval_single(&f, &grid("0,1,2"), &u).unwrap();
            assert!(soundness_suite(&s, Sampling::Exhaustive).passed());
        }
    }

    #[test]
    fn box_lacks_weak_disjunction_closure() {
        // w sees p and q; w1 sees only p; w2 sees only q
        let f = Frame::new(5, &[(0, 3), (0, 4), (1, 3), (2, 4)]).unwrap();
        let v = eval_vector(&f, &grid("0"), &OracleUniverse::full(&f), None).unwrap();
        let r = soundness_suite(&v, Sampling::Exhaustive);
        assert_eq!(r.law_holds(LAW_WEAK_DISJUNCTION), Some(false));
        assert!(r.passed());
    }

    #[test]
    fn induction_examples() {
        let f = Frame::chain(3).unwrap();
        let g = grid("0,1,2");
        let top = vec![f.top(); 3];
        let ok = reflexive_induction_check(&f, &g, &top).unwrap();
        assert!(ok.premise && ok.conclusion);
        let mut phi = top.clone();
        phi[0] = f.bottom();
        let vac = reflexive_induction_check(&f, &g, &phi).unwrap();
        assert!(!vac.premise && vac.holds());
        assert!(transfinite_reflexive_induction_check(&f, &g, &phi).unwrap().holds());
    }

    #[test]
    fn imc_examples() {
        let one = Frame::singleton();
        let r = build_imc(&one, &grid("0,1"), &OracleUniverse::full(&one), true).unwrap();
        assert_eq!(r.classes[0].members.len(), r.pairs);
        assert!(r.all_unique() && r.all_verified());
        let two = Frame::chain(2).unwrap();
        let r = build_imc(&two, &grid("0,1"), &OracleUniverse::full(&two), true).unwrap();
        assert!(r.all_unique() && r.all_verified());
        let big = Frame::chain(4).unwrap();
        assert!(matches!(
            build_imc(&big, &grid("0,1"), &OracleUniverse::full(&big), true),
            Err(MuenchError::TooLarge(_))
        ));
    }

    #[test]
    fn explore_report_shape() {
        let one = Frame::singleton();
        let p = eval_single(&one, &grid("0,1,2"), &OracleUniverse::full(&one)).unwrap();
        let r = explore_closure_failures(&p).unwrap();
        assert_eq!(r.findings.len(), 3);
        assert!(r.findings.iter().all(|f| f.violations == 0));
        let v = eval_vector(&one, &grid("0,1"), &OracleUniverse::full(&one), None).unwrap();
        assert!(explore_closure_failures(&v).is_err());
    }

    #[test]
    fn realize_formulas() {
        let f = Frame::chain(2).unwrap();
        let p = eval_vector(&f, &grid("0,1"), &OracleUniverse::full(&f), None).unwrap();
        let mut val = BTreeMap::new();
        val.insert("p".to_string(), f.bottom());
        let e = realize(&p, &Formula::parse("[0]p").unwrap(), &val, None).unwrap();
        assert_eq!(e.bits(), 0b01);
        let e = realize(&p, &Formula::parse("[1]p").unwrap(), &val, None).unwrap();
        assert!(e.is_top());
        assert!(realize(&p, &Formula::parse("[2]p").unwrap(), &val, None).is_err());
        assert!(realize(&p, &Formula::parse("q").unwrap(), &val, None).is_err());
        let one = Ordinal::one();
        assert!(realize(&p, &Formula::parse("#p").unwrap(), &val, Some(&one)).is_ok());
    }
}
