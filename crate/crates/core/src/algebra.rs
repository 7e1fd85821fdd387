//! Finite GL frames and the Boolean algebras of their world-sets.
//!
//! A [`Frame`] is a finite strict partial order; its elements are subsets of
//! worlds stored as a 16-bit mask. The box operator
//! `box(x) = { w | every successor of w lies in x }` interprets base
//! provability, and validity in the frame (`x = ⊤`) interprets base theoremhood.

use std::fmt;
use std::ops::{BitAnd, BitOr, Not};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported number of worlds.
pub const MAX_WORLDS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("frame size {0} out of range 1..=16")]
    SizeOutOfRange(usize),
    #[error("edge ({0},{1}) references a world outside the frame")]
    EdgeOutOfRange(usize, usize),
    #[error("relation is reflexive at world {0} (after transitive closure)")]
    Reflexive(usize),
    #[error("element of width {found} used with frame of {expected} worlds")]
    FrameMismatch { expected: usize, found: usize },
    #[error("element bits {bits:#x} exceed a frame of {worlds} worlds")]
    BitsOutOfRange { bits: u32, worlds: usize },
    #[error("frame file: {0}")]
    Json(String),
}

/// A set of worlds of some frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Element {
    bits: u16,
    width: u8,
}

impl Element {
    pub fn new(bits: u16, width: usize) -> Result<Self, AlgebraError> {
        if width == 0 || width > MAX_WORLDS {
            return Err(AlgebraError::SizeOutOfRange(width));
        }
        if u32::from(bits) & !mask(width) != 0 {
            return Err(AlgebraError::BitsOutOfRange {
                bits: bits.into(),
                worlds: width,
            });
        }
        Ok(Element {
            bits,
            width: width as u8,
        })
    }

    pub(crate) fn raw(bits: u16, width: usize) -> Self {
        debug_assert!(u32::from(bits) & !mask(width) == 0);
        Element {
            bits,
            width: width as u8,
        }
    }

    pub fn top(width: usize) -> Self {
        Element::raw(mask(width) as u16, width)
    }

    pub fn bottom(width: usize) -> Self {
        Element::raw(0, width)
    }

    pub fn bits(self) -> u16 {
        self.bits
    }

    pub fn width(self) -> usize {
        self.width as usize
    }

    pub fn contains(self, world: usize) -> bool {
        world < self.width() && self.bits & (1 << world) != 0
    }

    pub fn is_top(self) -> bool {
        u32::from(self.bits) == mask(self.width())
    }

    pub fn is_bottom(self) -> bool {
        self.bits == 0
    }

    pub fn implies(self, other: Element) -> Element {
        !self | other
    }

    pub fn iff(self, other: Element) -> Element {
        self.implies(other) & other.implies(self)
    }

    /// Lattice order: `self ⊆ other`.
    pub fn le(self, other: Element) -> bool {
        debug_assert_eq!(self.width, other.width);
        self.bits & !other.bits == 0
    }

    pub fn worlds(self) -> impl Iterator<Item = usize> {
        (0..self.width()).filter(move |&w| self.contains(w))
    }
}

impl BitAnd for Element {
    type Output = Element;
    fn bitand(self, rhs: Element) -> Element {
        debug_assert_eq!(self.width, rhs.width);
        Element::raw(self.bits & rhs.bits, self.width())
    }
}

impl BitOr for Element {
    type Output = Element;
    fn bitor(self, rhs: Element) -> Element {
        debug_assert_eq!(self.width, rhs.width);
        Element::raw(self.bits | rhs.bits, self.width())
    }
}

impl Not for Element {
    type Output = Element;
    fn not(self) -> Element {
        Element::raw(!self.bits & mask(self.width()) as u16, self.width())
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, w) in self.worlds().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, "}}")
    }
}

pub(crate) fn mask(width: usize) -> u32 {
    if width >= 32 {
        u32::MAX
    } else {
        (1u32 << width) - 1
    }
}

/// A finite frame; `succ[w]` is the mask of worlds accessible from `w`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Frame {
    n: usize,
    succ: Vec<u16>,
}

/// On-disk frame description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameFile {
    pub worlds: usize,
    pub edges: Vec<[usize; 2]>,
}

impl Frame {
    /// Builds the transitive closure of `edges`; rejects any reflexive pair.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, AlgebraError> {
        if n == 0 || n > MAX_WORLDS {
            return Err(AlgebraError::SizeOutOfRange(n));
        }
        let mut succ = vec![0u16; n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(AlgebraError::EdgeOutOfRange(i, j));
            }
            succ[i] |= 1 << j;
        }
        close_transitively(&mut succ);
        if let Some(w) = (0..n).find(|&w| succ[w] & (1 << w) != 0) {
            return Err(AlgebraError::Reflexive(w));
        }
        Ok(Frame { n, succ })
    }

    /// A frame with exactly the given successor masks, skipping every
    /// invariant check. Used to exhibit what breaks on non-GL frames.
    pub fn from_successors_unchecked(succ: Vec<u16>) -> Self {
        Frame {
            n: succ.len(),
            succ,
        }
    }

    /// The chain `w_{n-1} → … → w_1 → w_0` (transitively closed).
    pub fn chain(n: usize) -> Result<Self, AlgebraError> {
        let edges: Vec<_> = (1..n).map(|i| (i, i - 1)).collect();
        Frame::new(n, &edges)
    }

    pub fn singleton() -> Self {
        Frame { n: 1, succ: vec![0] }
    }

    pub fn from_json(text: &str) -> Result<Self, AlgebraError> {
        let file: FrameFile =
            serde_json::from_str(text).map_err(|e| AlgebraError::Json(e.to_string()))?;
        let edges: Vec<_> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        Frame::new(file.worlds, &edges)
    }

    pub fn to_file(&self) -> FrameFile {
        let mut edges = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.succ[i] & (1 << j) != 0 {
                    edges.push([i, j]);
                }
            }
        }
        FrameFile {
            worlds: self.n,
            edges,
        }
    }

    pub fn worlds(&self) -> usize {
        self.n
    }

    pub fn successors(&self, w: usize) -> Element {
        Element::raw(self.succ[w], self.n)
    }

    pub fn sees(&self, w: usize, v: usize) -> bool {
        self.succ[w] & (1 << v) != 0
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(|s| s.count_ones() as usize).sum()
    }

    pub fn top(&self) -> Element {
        Element::top(self.n)
    }

    pub fn bottom(&self) -> Element {
        Element::bottom(self.n)
    }

    pub fn element(&self, bits: u16) -> Result<Element, AlgebraError> {
        Element::new(bits, self.n)
    }

    /// Number of elements of the algebra, `2^n`.
    pub fn algebra_size(&self) -> usize {
        1 << self.n
    }

    /// All elements in increasing bit order.
    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        (0..self.algebra_size()).map(move |b| Element::raw(b as u16, self.n))
    }

    pub fn owns(&self, x: Element) -> Result<(), AlgebraError> {
        if x.width() != self.n {
            return Err(AlgebraError::FrameMismatch {
                expected: self.n,
                found: x.width(),
            });
        }
        Ok(())
    }

    /// `{ w | ∀v (w R v → v ∈ x) }`.
    pub fn box_of(&self, x: Element) -> Result<Element, AlgebraError> {
        self.owns(x)?;
        Ok(self.box_op(x))
    }

    /// Unchecked box for elements already known to belong to this frame.
    pub fn box_op(&self, x: Element) -> Element {
        Element::raw(self.box_bits(x.bits), self.n)
    }

    pub(crate) fn box_bits(&self, x: u16) -> u16 {
        let mut out = 0u16;
        for (w, &s) in self.succ.iter().enumerate() {
            if s & !x == 0 {
                out |= 1 << w;
            }
        }
        out
    }

    pub fn diamond_op(&self, x: Element) -> Element {
        !self.box_op(!x)
    }

    pub fn is_transitive(&self) -> bool {
        (0..self.n).all(|w| {
            (0..self.n)
                .filter(|&v| self.sees(w, v))
                .all(|v| self.succ[v] & !self.succ[w] == 0)
        })
    }

    pub fn is_irreflexive(&self) -> bool {
        (0..self.n).all(|w| !self.sees(w, w))
    }

    /// Length of the longest chain of successors starting anywhere.
    pub fn depth(&self) -> usize {
        let mut memo = vec![None; self.n];
        (0..self.n).map(|w| self.depth_at(w, &mut memo)).max().unwrap_or(0)
    }

    fn depth_at(&self, w: usize, memo: &mut Vec<Option<usize>>) -> usize {
        if let Some(d) = memo[w] {
            return d;
        }
        let d = (0..self.n)
            .filter(|&v| self.sees(w, v))
            .map(|v| 1 + self.depth_at(v, memo))
            .max()
            .unwrap_or(0);
        memo[w] = Some(d);
        d
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let file = self.to_file();
        write!(f, "frame({} worlds; ", file.worlds)?;
        for (i, [a, b]) in file.edges.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{a}>{b}")?;
        }
        write!(f, ")")
    }
}

fn close_transitively(succ: &mut [u16]) {
    let n = succ.len();
    for k in 0..n {
        for i in 0..n {
            if succ[i] & (1 << k) != 0 {
                succ[i] |= succ[k];
            }
        }
    }
}

/// A random strict partial order on `n` worlds: a random DAG over a shuffled
/// world order, then its transitive closure. Deterministic in `seed`.
pub fn random_frame(seed: u64, n: usize) -> Result<Frame, AlgebraError> {
    if n == 0 || n > MAX_WORLDS {
        return Err(AlgebraError::SizeOutOfRange(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let density: f64 = rng.gen_range(0.15..0.7);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(density) {
                edges.push((order[j], order[i]));
            }
        }
    }
    Frame::new(n, &edges)
}

/// Every strict partial order on `n` labelled worlds.
pub fn enumerate_frames(n: usize) -> Result<Vec<Frame>, AlgebraError> {
    if n == 0 || n > 4 {
        return Err(AlgebraError::SizeOutOfRange(n));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let mut out = Vec::new();
    for subset in 0u32..(1 << pairs.len()) {
        let mut succ = vec![0u16; n];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if subset & (1 << k) != 0 {
                succ[i] |= 1 << j;
            }
        }
        let frame = Frame { n, succ };
        if frame.is_transitive() && frame.is_irreflexive() {
            out.push(frame);
        }
    }
    Ok(out)
}

/// How element pairs are drawn for law sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampling {
    /// Every element (or pair, or triple) of the algebra.
    Exhaustive,
    /// `count` uniformly random draws from a seeded stream.
    Random { count: usize, seed: u64 },
}

impl Sampling {
    /// Exhaustive for frames of at most four worlds, otherwise `count` draws.
    pub fn auto(frame: &Frame, count: usize, seed: u64) -> Self {
        if frame.worlds() <= 4 {
            Sampling::Exhaustive
        } else {
            Sampling::Random { count, seed }
        }
    }

    /// Pairs of elements according to this sampling plan.
    pub fn pairs(&self, frame: &Frame) -> Vec<(Element, Element)> {
        match *self {
            Sampling::Exhaustive => frame
                .elements()
                .flat_map(|x| frame.elements().map(move |y| (x, y)))
                .collect(),
            Sampling::Random { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let size = frame.algebra_size();
                (0..count)
                    .map(|_| {
                        let x = Element::raw(rng.gen_range(0..size) as u16, frame.worlds());
                        let y = Element::raw(rng.gen_range(0..size) as u16, frame.worlds());
                        (x, y)
                    })
                    .collect()
            }
        }
    }

    /// Single elements according to this sampling plan.
    pub fn singles(&self, frame: &Frame) -> Vec<Element> {
        match *self {
            Sampling::Exhaustive => frame.elements().collect(),
            Sampling::Random { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
                let size = frame.algebra_size();
                let mut v: Vec<Element> = (0..count.min(4 * size))
                    .map(|_| Element::raw(rng.gen_range(0..size) as u16, frame.worlds()))
                    .collect();
                v.sort();
                v.dedup();
                v
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlViolation {
    pub law: String,
    pub x: Element,
    pub y: Element,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlLawReport {
    pub worlds: usize,
    pub checked_pairs: usize,
    pub violations: Vec<GlViolation>,
}

impl GlLawReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks K, 4, Löb and necessitation for the frame's box on sampled pairs.
/// Does not assume the frame satisfies the GL invariants.
pub fn check_gl_laws(frame: &Frame, sampling: Sampling) -> GlLawReport {
    let pairs = sampling.pairs(frame);
    let mut violations = Vec::new();
    let top = frame.top();
    let b = |x| frame.box_op(x);
    let mut record = |law: &str, x, y| {
        if !violations.iter().any(|v: &GlViolation| v.law == law) {
            violations.push(GlViolation {
                law: law.to_string(),
                x,
                y,
            });
        }
    };
    for &(x, y) in &pairs {
        if !(b(x.implies(y)) & b(x)).le(b(y)) {
            record("K", x, y);
        }
        if !b(x).le(b(b(x))) {
            record("4", x, y);
        }
        if !b(b(x).implies(x)).le(b(x)) {
            record("lob", x, y);
        }
        if x == top && b(x) != top {
            record("necessitation", x, y);
        }
    }
    if b(top) != top {
        record("necessitation", top, top);
    }
    GlLawReport {
        worlds: frame.worlds(),
        checked_pairs: pairs.len(),
        violations,
    }
}
