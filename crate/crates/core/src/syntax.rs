//! The modal language of GLP with ordinal-indexed boxes, plus the extra
//! operator `■` used by the GL^■ system.
//!
//! Diamonds are not a constructor: `<o>φ` parses to `~[o]~φ`, and the
//! printer folds that shape back into a diamond.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::ordinals::{Ordinal, OrdinalError, OrdinalParser};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModalLabel {
    Ord(Ordinal),
    BlackSquare,
}

impl ModalLabel {
    pub fn ordinal(&self) -> Option<&Ordinal> {
        match self {
            ModalLabel::Ord(o) => Some(o),
            ModalLabel::BlackSquare => None,
        }
    }
}

impl From<Ordinal> for ModalLabel {
    fn from(o: Ordinal) -> Self {
        ModalLabel::Ord(o)
    }
}

impl fmt::Display for ModalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModalLabel::Ord(o) => write!(f, "{o}"),
            ModalLabel::BlackSquare => write!(f, "#"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(String),
    Top,
    Bot,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Box(ModalLabel, Box<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Self {
        Formula::Atom(name.to_string())
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn imp(a: Formula, b: Formula) -> Self {
        Formula::Imp(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn boxed(label: impl Into<ModalLabel>, f: Formula) -> Self {
        Formula::Box(label.into(), Box::new(f))
    }

    /// `<label>f`, i.e. `~[label]~f`.
    pub fn diamond(label: impl Into<ModalLabel>, f: Formula) -> Self {
        Formula::not(Formula::boxed(label, Formula::not(f)))
    }

    pub fn black(f: Formula) -> Self {
        Formula::boxed(ModalLabel::BlackSquare, f)
    }

    /// Recognises the desugared diamond shape `~[l]~f`.
    pub fn as_diamond(&self) -> Option<(&ModalLabel, &Formula)> {
        if let Formula::Not(inner) = self {
            if let Formula::Box(l, body) = inner.as_ref() {
                if let Formula::Not(f) = body.as_ref() {
                    return Some((l, f));
                }
            }
        }
        None
    }

    pub fn as_imp(&self) -> Option<(&Formula, &Formula)> {
        match self {
            Formula::Imp(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn as_box(&self) -> Option<(&ModalLabel, &Formula)> {
        match self {
            Formula::Box(l, f) => Some((l, f)),
            _ => None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, SyntaxError> {
        parse_formula(text)
    }

    /// Visits every modal label occurring in the formula.
    pub fn for_each_label(&self, visit: &mut impl FnMut(&ModalLabel)) {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => {}
            Formula::Not(a) => a.for_each_label(visit),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) | Formula::Iff(a, b) => {
                a.for_each_label(visit);
                b.for_each_label(visit);
            }
            Formula::Box(l, a) => {
                visit(l);
                a.for_each_label(visit);
            }
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(p) => {
                out.insert(p.clone());
            }
            Formula::Top | Formula::Bot => {}
            Formula::Not(a) | Formula::Box(_, a) => a.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) | Formula::Iff(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    pub fn has_black_square(&self) -> bool {
        let mut found = false;
        self.for_each_label(&mut |l| found |= *l == ModalLabel::BlackSquare);
        found
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => 0,
            Formula::Not(a) | Formula::Box(_, a) => 1 + a.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) | Formula::Iff(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }
}

/// The set of ordinal labels occurring in `f`.
pub fn signature(f: &Formula) -> BTreeSet<Ordinal> {
    let mut out = BTreeSet::new();
    f.for_each_label(&mut |l| {
        if let ModalLabel::Ord(o) = l {
            out.insert(o.clone());
        }
    });
    out
}

/// A propositional skeleton together with the boxed subformulas it hides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Abstraction {
    pub skeleton: Formula,
    /// Fresh atom name and the maximal boxed subformula it replaces, in
    /// order of first occurrence.
    pub table: Vec<(String, Formula)>,
}

/// Replaces each maximal box-rooted subformula by a fresh atom; equal
/// subformulas share an atom. Fresh names avoid the atoms already in `f`.
pub fn abstract_atoms(f: &Formula) -> Abstraction {
    let taken = f.atoms();
    let mut fresh = FreshNames {
        taken,
        next: 0,
    };
    let mut names: HashMap<Formula, String> = HashMap::new();
    let mut table = Vec::new();
    let skeleton = abstract_rec(f, &mut fresh, &mut names, &mut table);
    Abstraction { skeleton, table }
}

struct FreshNames {
    taken: BTreeSet<String>,
    next: usize,
}

impl FreshNames {
    fn next(&mut self) -> String {
        loop {
            let letter = (b'a' + (self.next % 26) as u8) as char;
            let round = self.next / 26;
            self.next += 1;
            let name = if round == 0 {
                letter.to_string()
            } else {
                format!("{letter}{round}")
            };
            if !self.taken.contains(&name) {
                return name;
            }
        }
    }
}

fn abstract_rec(
    f: &Formula,
    fresh: &mut FreshNames,
    names: &mut HashMap<Formula, String>,
    table: &mut Vec<(String, Formula)>,
) -> Formula {
    let mut rec = |g: &Formula| Box::new(abstract_rec(g, fresh, names, table));
    match f {
        Formula::Atom(_) | Formula::Top | Formula::Bot => f.clone(),
        Formula::Not(a) => Formula::Not(rec(a)),
        Formula::And(a, b) => {
            let a = rec(a);
            Formula::And(a, rec(b))
        }
        Formula::Or(a, b) => {
            let a = rec(a);
            Formula::Or(a, rec(b))
        }
        Formula::Imp(a, b) => {
            let a = rec(a);
            Formula::Imp(a, rec(b))
        }
        Formula::Iff(a, b) => {
            let a = rec(a);
            Formula::Iff(a, rec(b))
        }
        Formula::Box(..) => {
            if let Some(name) = names.get(f) {
                return Formula::Atom(name.clone());
            }
            let name = fresh.next();
            names.insert(f.clone(), name.clone());
            table.push((name.clone(), f.clone()));
            Formula::Atom(name)
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("formula syntax error at byte {pos}: {msg}")]
    At { pos: usize, msg: String },
    #[error(transparent)]
    Ordinal(#[from] OrdinalError),
}

/// Parses a formula. A bare `#` prefix is shorthand for `[#]`.
pub fn parse_formula(text: &str) -> Result<Formula, SyntaxError> {
    let mut p = Parser { text, pos: 0 };
    let f = p.iff()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(f)
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> SyntaxError {
        SyntaxError::At {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn iff(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.imp()?;
        if self.eat("<->") {
            let rhs = self.iff()?;
            return Ok(Formula::iff(lhs, rhs));
        }
        Ok(lhs)
    }

    fn imp(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.or()?;
        if self.eat("->") {
            let rhs = self.imp()?;
            return Ok(Formula::imp(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.and()?;
        while self.eat("|") {
            lhs = Formula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.unary()?;
        while self.eat("&") {
            lhs = Formula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn label(&mut self, close: u8) -> Result<ModalLabel, SyntaxError> {
        self.skip_ws();
        let label = if self.text.as_bytes().get(self.pos) == Some(&b'#') {
            self.pos += 1;
            ModalLabel::BlackSquare
        } else {
            let mut op = OrdinalParser::at(self.text, self.pos);
            let o = op.ordinal()?;
            self.pos = op.pos;
            ModalLabel::Ord(o)
        };
        self.skip_ws();
        if self.text.as_bytes().get(self.pos) != Some(&close) {
            return Err(self.err(&format!("expected '{}'", close as char)));
        }
        self.pos += 1;
        Ok(label)
    }

    fn unary(&mut self) -> Result<Formula, SyntaxError> {
        self.skip_ws();
        let bytes = self.text.as_bytes();
        let Some(&c) = bytes.get(self.pos) else {
            return Err(self.err("unexpected end of input"));
        };
        match c {
            b'~' => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            b'[' => {
                self.pos += 1;
                let l = self.label(b']')?;
                Ok(Formula::Box(l, Box::new(self.unary()?)))
            }
            b'#' => {
                self.pos += 1;
                Ok(Formula::black(self.unary()?))
            }
            b'<' => {
                self.pos += 1;
                let l = self.label(b'>')?;
                Ok(Formula::diamond(l, self.unary()?))
            }
            b'(' => {
                self.pos += 1;
                let f = self.iff()?;
                if !self.eat(")") {
                    return Err(self.err("expected ')'"));
                }
                Ok(f)
            }
            b'T' => {
                self.pos += 1;
                Ok(Formula::Top)
            }
            b'F' => {
                self.pos += 1;
                Ok(Formula::Bot)
            }
            b'a'..=b'z' => {
                let start = self.pos;
                self.pos += 1;
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_lowercase() || bytes[self.pos].is_ascii_digit())
                {
                    self.pos += 1;
                }
                Ok(Formula::Atom(self.text[start..self.pos].to_string()))
            }
            _ => Err(self.err("expected a formula")),
        }
    }
}

const PREC_IFF: u8 = 1;
const PREC_IMP: u8 = 2;
const PREC_OR: u8 = 3;
const PREC_AND: u8 = 4;
const PREC_UNARY: u8 = 5;

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Iff(..) => PREC_IFF,
        Formula::Imp(..) => PREC_IMP,
        Formula::Or(..) => PREC_OR,
        Formula::And(..) => PREC_AND,
        _ => PREC_UNARY,
    }
}

fn write_at(f: &Formula, min: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    if prec(f) < min {
        write!(out, "(")?;
        write_formula(f, out)?;
        write!(out, ")")
    } else {
        write_formula(f, out)
    }
}

fn write_formula(f: &Formula, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    if let Some((l, body)) = f.as_diamond() {
        write!(out, "<{l}>")?;
        return write_at(body, PREC_UNARY, out);
    }
    match f {
        Formula::Atom(p) => write!(out, "{p}"),
        Formula::Top => write!(out, "T"),
        Formula::Bot => write!(out, "F"),
        Formula::Not(a) => {
            write!(out, "~")?;
            write_at(a, PREC_UNARY, out)
        }
        Formula::Box(l, a) => {
            write!(out, "[{l}]")?;
            write_at(a, PREC_UNARY, out)
        }
        Formula::And(a, b) => {
            write_at(a, PREC_AND, out)?;
            write!(out, " & ")?;
            write_at(b, PREC_AND + 1, out)
        }
        Formula::Or(a, b) => {
            write_at(a, PREC_OR, out)?;
            write!(out, " | ")?;
            write_at(b, PREC_OR + 1, out)
        }
        Formula::Imp(a, b) => {
            write_at(a, PREC_IMP + 1, out)?;
            write!(out, " -> ")?;
            write_at(b, PREC_IMP, out)
        }
        Formula::Iff(a, b) => {
            write_at(a, PREC_IFF + 1, out)?;
            write!(out, " <-> ")?;
            write_at(b, PREC_IFF, out)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self, f)
    }
}

pub fn print_formula(f: &Formula) -> String {
    f.to_string()
}
