//! Ordinal notations below ε₀ in Cantor normal form.
//!
//! An [`Ordinal`] is a list of `(exponent, coefficient)` terms with strictly
//! decreasing exponents and positive coefficients; the empty list is `0`.
//! Only the order-theoretic operations needed by the provability machinery
//! are provided: comparison, successor and limit detection.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// One Cantor-normal-form term `ω^exponent · coefficient`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub exponent: Ordinal,
    pub coefficient: u64,
}

/// An ordinal below ε₀.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Ordinal {
    terms: Vec<Term>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrdinalError {
    #[error("ordinal syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("terms are not in strictly decreasing exponent order")]
    NotNormal,
    #[error("coefficient must be positive")]
    ZeroCoefficient,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Ordinal::finite(1)
    }

    pub fn omega() -> Self {
        Ordinal::omega_pow(Ordinal::one(), 1)
    }

    pub fn finite(n: u64) -> Self {
        if n == 0 {
            Ordinal::zero()
        } else {
            Ordinal::omega_pow(Ordinal::zero(), n)
        }
    }

    /// `ω^exponent · coefficient`.
    pub fn omega_pow(exponent: Ordinal, coefficient: u64) -> Self {
        if coefficient == 0 {
            return Ordinal::zero();
        }
        Ordinal {
            terms: vec![Term {
                exponent,
                coefficient,
            }],
        }
    }

    /// Builds an ordinal from terms, checking the normal-form invariants.
    pub fn from_terms(terms: Vec<Term>) -> Result<Self, OrdinalError> {
        if terms.iter().any(|t| t.coefficient == 0) {
            return Err(OrdinalError::ZeroCoefficient);
        }
        if terms
            .windows(2)
            .any(|w| w[0].exponent.cmp(&w[1].exponent) != Ordering::Greater)
        {
            return Err(OrdinalError::NotNormal);
        }
        Ok(Ordinal { terms })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The finite value, if this ordinal is below ω.
    pub fn as_finite(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [t] if t.exponent.is_zero() => Some(t.coefficient),
            _ => None,
        }
    }

    /// The least notation strictly above `self`.
    pub fn succ(&self) -> Self {
        let mut terms = self.terms.clone();
        match terms.last_mut() {
            Some(last) if last.exponent.is_zero() => last.coefficient += 1,
            _ => terms.push(Term {
                exponent: Ordinal::zero(),
                coefficient: 1,
            }),
        }
        Ordinal { terms }
    }

    /// The immediate predecessor, when `self` is a successor ordinal.
    pub fn pred(&self) -> Option<Self> {
        let last = self.terms.last()?;
        if !last.exponent.is_zero() {
            return None;
        }
        let mut terms = self.terms.clone();
        if last.coefficient == 1 {
            terms.pop();
        } else if let Some(t) = terms.last_mut() {
            t.coefficient -= 1;
        }
        Some(Ordinal { terms })
    }

    pub fn is_limit(&self) -> bool {
        matches!(self.terms.last(), Some(t) if !t.exponent.is_zero())
    }

    pub fn is_successor(&self) -> bool {
        matches!(self.terms.last(), Some(t) if t.exponent.is_zero())
    }

    /// Number of symbols in the notation; used to bound enumerations.
    pub fn size(&self) -> usize {
        self.terms.iter().map(|t| 1 + t.exponent.size()).sum()
    }

    pub fn parse(text: &str) -> Result<Self, OrdinalError> {
        let mut p = OrdinalParser::new(text);
        let o = p.ordinal()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(o)
    }

    fn fmt_exponent(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.terms.as_slice() {
            [] => write!(f, "0"),
            [t] if t.exponent.is_zero() => write!(f, "{}", t.coefficient),
            [t] if t.coefficient == 1 => {
                write!(f, "w")?;
                if t.exponent != Ordinal::one() {
                    write!(f, "^")?;
                    t.exponent.fmt_exponent(f)?;
                }
                Ok(())
            }
            _ => write!(f, "({self})"),
        }
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.terms.iter().zip(&other.terms) {
            let ord = a
                .exponent
                .cmp(&b.exponent)
                .then(a.coefficient.cmp(&b.coefficient));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Total order on notations.
pub fn compare(a: &Ordinal, b: &Ordinal) -> Ordering {
    a.cmp(b)
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            if t.exponent.is_zero() {
                write!(f, "{}", t.coefficient)?;
                continue;
            }
            write!(f, "w")?;
            if t.exponent != Ordinal::one() {
                write!(f, "^")?;
                t.exponent.fmt_exponent(f)?;
            }
            if t.coefficient != 1 {
                write!(f, "*{}", t.coefficient)?;
            }
        }
        Ok(())
    }
}

impl FromStr for Ordinal {
    type Err = OrdinalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ordinal::parse(s)
    }
}

impl Serialize for Ordinal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ordinal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Ordinal::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Recursive-descent parser over the ordinal grammar. Shared with the
/// formula parser, which embeds ordinals inside modal labels.
pub(crate) struct OrdinalParser<'a> {
    pub(crate) src: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> OrdinalParser<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        OrdinalParser::at(text, 0)
    }

    /// Parser over `text` starting at byte `pos`; errors report absolute positions.
    pub(crate) fn at(text: &'a str, pos: usize) -> Self {
        OrdinalParser {
            src: text.as_bytes(),
            pos,
        }
    }

    fn error(&self, msg: &str) -> OrdinalError {
        OrdinalError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn nat(&mut self) -> Result<u64, OrdinalError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a natural number"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| OrdinalError::Syntax {
                pos: start,
                msg: "natural number out of range".into(),
            })
    }

    pub(crate) fn ordinal(&mut self) -> Result<Ordinal, OrdinalError> {
        let start = self.pos;
        let mut terms = vec![self.term()?];
        while self.peek() == Some(b'+') {
            self.pos += 1;
            terms.push(self.term()?);
        }
        if terms.len() == 1 && terms[0].coefficient == 0 {
            return Ok(Ordinal::zero());
        }
        if terms.iter().any(|t| t.coefficient == 0) {
            return Err(OrdinalError::Syntax {
                pos: start,
                msg: "zero term inside a sum".into(),
            });
        }
        Ordinal::from_terms(terms).map_err(|e| match e {
            OrdinalError::NotNormal => OrdinalError::Syntax {
                pos: start,
                msg: "exponents must be strictly decreasing".into(),
            },
            other => other,
        })
    }

    fn term(&mut self) -> Result<Term, OrdinalError> {
        match self.peek() {
            Some(b'w') => {
                self.pos += 1;
                let exponent = if self.peek() == Some(b'^') {
                    self.pos += 1;
                    self.exponent()?
                } else {
                    Ordinal::one()
                };
                let coefficient = if self.peek() == Some(b'*') {
                    self.pos += 1;
                    let c = self.nat()?;
                    if c == 0 {
                        return Err(self.error("coefficient must be positive"));
                    }
                    c
                } else {
                    1
                };
                Ok(Term {
                    exponent,
                    coefficient,
                })
            }
            Some(c) if c.is_ascii_digit() => Ok(Term {
                exponent: Ordinal::zero(),
                coefficient: self.nat()?,
            }),
            _ => Err(self.error("expected 'w' or a natural number")),
        }
    }

    fn exponent(&mut self) -> Result<Ordinal, OrdinalError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let o = self.ordinal()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(o)
            }
            Some(b'w') => {
                self.pos += 1;
                let e = if self.peek() == Some(b'^') {
                    self.pos += 1;
                    self.exponent()?
                } else {
                    Ordinal::one()
                };
                Ok(Ordinal::omega_pow(e, 1))
            }
            Some(c) if c.is_ascii_digit() => Ok(Ordinal::finite(self.nat()?)),
            _ => Err(self.error("expected an exponent")),
        }
    }
}

/// A finite, strictly increasing list of notations approximating all
/// ordinals below `cap`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdinalGrid {
    points: Vec<Ordinal>,
    cap: Ordinal,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("grid is empty")]
    Empty,
    #[error("grid violates the order requirements: {0}")]
    OrderRequirements(String),
    #[error(transparent)]
    Ordinal(#[from] OrdinalError),
}

impl OrdinalGrid {
    /// Builds a grid, sorting and de-duplicating the points. The cap defaults
    /// to the successor of the largest point.
    pub fn new(points: Vec<Ordinal>, cap: Option<Ordinal>) -> Result<Self, GridError> {
        let mut points = points;
        points.sort();
        points.dedup();
        let cap = match cap {
            Some(c) => c,
            None => points.last().ok_or(GridError::Empty)?.succ(),
        };
        let grid = OrdinalGrid { points, cap };
        if !check_order_requirements(&grid) {
            return Err(GridError::OrderRequirements(format!(
                "{} with cap {}",
                grid, grid.cap
            )));
        }
        Ok(grid)
    }

    /// Grid without validation; only for exercising [`check_order_requirements`].
    pub fn new_unchecked(points: Vec<Ordinal>, cap: Ordinal) -> Self {
        OrdinalGrid { points, cap }
    }

    /// The grid `{0, 1, …, n-1}`.
    pub fn finite(n: u64) -> Self {
        let points = (0..n.max(1)).map(Ordinal::finite).collect();
        OrdinalGrid {
            points,
            cap: Ordinal::finite(n.max(1)),
        }
    }

    /// Parses a comma-separated list such as `"0,1,2,w"`.
    pub fn parse(text: &str) -> Result<Self, GridError> {
        let points = text
            .split(',')
            .map(|s| Ordinal::parse(s.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        OrdinalGrid::new(points, None)
    }

    pub fn points(&self) -> &[Ordinal] {
        &self.points
    }

    pub fn cap(&self) -> &Ordinal {
        &self.cap
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, o: &Ordinal) -> Option<usize> {
        self.points.binary_search(o).ok()
    }

    pub fn contains(&self, o: &Ordinal) -> bool {
        self.index_of(o).is_some()
    }
}

impl fmt::Display for OrdinalGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.points.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

/// Checks that `≺` restricted to the grid is transitive and irreflexive,
/// has minimum `0`, is right-discrete (every non-maximal point has an
/// immediate successor among the grid points) and stays below the cap.
pub fn check_order_requirements(grid: &OrdinalGrid) -> bool {
    let pts = &grid.points;
    let n = pts.len();
    if n == 0 {
        return false;
    }
    let below = |i: usize, j: usize| pts[i] < pts[j];
    for i in 0..n {
        if below(i, i) || pts[i] >= grid.cap {
            return false;
        }
        for j in 0..n {
            if i != j && pts[i] == pts[j] {
                return false;
            }
            for k in 0..n {
                if below(i, j) && below(j, k) && !below(i, k) {
                    return false;
                }
            }
        }
    }
    let min = (0..n).find(|&i| (0..n).all(|j| j == i || below(i, j)));
    match min {
        Some(i) if pts[i].is_zero() => {}
        _ => return false,
    }
    (0..n).all(|i| {
        let above: Vec<usize> = (0..n).filter(|&j| below(i, j)).collect();
        above.is_empty()
            || above
                .iter()
                .any(|&j| !above.iter().any(|&k| below(k, j)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(s: &str) -> Ordinal {
        Ordinal::parse(s).unwrap()
    }

    #[test]
    fn compare_examples() {
        assert_eq!(compare(&Ordinal::omega(), &Ordinal::finite(3)), Ordering::Greater);
        assert_eq!(compare(&Ordinal::zero(), &Ordinal::zero()), Ordering::Equal);
        assert_eq!(compare(&o("w^2*2+1"), &o("w^2*2+w")), Ordering::Less);
    }

    #[test]
    fn succ_examples() {
        assert_eq!(Ordinal::zero().succ(), Ordinal::one());
        assert_eq!(Ordinal::omega().succ(), o("w+1"));
        assert_eq!(o("w^w+w*2").succ(), o("w^w+w*2+1"));
        assert_eq!(o("w+3").pred(), Some(o("w+2")));
        assert_eq!(o("w+1").pred(), Some(o("w")));
        assert_eq!(o("w").pred(), None);
    }

    #[test]
    fn limit_examples() {
        assert!(!Ordinal::zero().is_limit());
        assert!(Ordinal::omega().is_limit());
        assert!(!o("w^2+5").is_limit());
    }

    #[test]
    fn parse_and_print() {
        let a = o("w^2*3+w+1");
        assert_eq!(a.terms().len(), 3);
        assert_eq!(a.terms()[0].exponent, Ordinal::finite(2));
        assert_eq!(a.terms()[0].coefficient, 3);
        assert_eq!(a.to_string(), "w^2*3+w+1");
        assert_eq!(o("0"), Ordinal::zero());
        assert_eq!(o("w^w").to_string(), "w^w");
        assert_eq!(o("w^(w+1)").to_string(), "w^(w+1)");
        assert_eq!(o("w^w^2*3").to_string(), "w^w^2*3");
        assert_eq!(o("w^(w*2)").to_string(), "w^(w*2)");
        assert_eq!(o("w^0*4"), Ordinal::finite(4));
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert!(matches!(Ordinal::parse("w+w^2"), Err(OrdinalError::Syntax { .. })));
        assert!(matches!(Ordinal::parse("w+w"), Err(OrdinalError::Syntax { .. })));
        assert!(matches!(Ordinal::parse("1+w"), Err(OrdinalError::Syntax { .. })));
        assert!(matches!(Ordinal::parse("w*0"), Err(OrdinalError::Syntax { .. })));
        assert!(matches!(Ordinal::parse("w+0"), Err(OrdinalError::Syntax { .. })));
        match Ordinal::parse("w+x") {
            Err(OrdinalError::Syntax { pos, .. }) => assert_eq!(pos, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Ordinal::parse("").is_err());
        assert!(Ordinal::parse("w)").is_err());
    }

    #[test]
    fn from_terms_rejects_bad_normal_form() {
        let t = |e: u64, c| Term {
            exponent: Ordinal::finite(e),
            coefficient: c,
        };
        assert_eq!(
            Ordinal::from_terms(vec![t(1, 1), t(1, 2)]),
            Err(OrdinalError::NotNormal)
        );
        assert_eq!(
            Ordinal::from_terms(vec![t(1, 0)]),
            Err(OrdinalError::ZeroCoefficient)
        );
    }

    #[test]
    fn grid_requirements() {
        let g = |v: &[&str], cap: &str| {
            OrdinalGrid::new_unchecked(v.iter().map(|s| o(s)).collect(), o(cap))
        };
        assert!(check_order_requirements(&g(&["0", "1", "2", "3"], "4")));
        assert!(check_order_requirements(&g(&["0", "1", "w"], "w+1")));
        assert!(!check_order_requirements(&g(&["1", "2"], "3")));
        assert!(!check_order_requirements(&g(&["0", "w"], "w")));
        assert!(!check_order_requirements(&g(&["0", "1", "1"], "2")));
        assert!(!check_order_requirements(&g(&[], "1")));
    }

    #[test]
    fn grid_parse_sorts() {
        let grid = OrdinalGrid::parse("w, 0, 2, 1").unwrap();
        assert_eq!(grid.to_string(), "{0,1,2,w}");
        assert_eq!(grid.cap(), &o("w+1"));
        assert_eq!(grid.index_of(&o("2")), Some(2));
        assert!(OrdinalGrid::parse("1,2").is_err());
    }
}
