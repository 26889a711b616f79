//! Standard-model backends for the supported theories.

pub mod cube;
pub mod fragment;
pub mod halfset;
pub mod intervals;
pub mod pq;
pub mod qelem;
pub mod realize;
pub mod relational;

use std::fmt;
use std::str::FromStr;

pub use cube::{cube_decompose, Cube, MemberExpr};
pub use fragment::{Env, Fragment};
pub use halfset::HalfSet;
pub use intervals::{carve_interval_subset, IntervalUnion};
pub use qelem::{PElem, QElem, Registry};
pub use realize::{check_diagram_consistency, realize_in_standard_model};

use crate::error::{Error, Result};
use crate::formula::Sort;
use crate::scalar::fmt_rat;
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TheoryId {
    /// The random ternary relation.
    TR,
    /// The generic `K_s`-free graph.
    Henson(usize),
    RandomGraph,
    /// Points of `[0,1)` and sets that are half full.
    THalf,
    THalfInf,
    /// Reduct of `THalfInf` without the measure sort.
    THalfInfPQ,
}

impl TheoryId {
    pub fn henson(s: usize) -> Result<TheoryId> {
        if s < 3 {
            return Err(Error::Precondition(format!("Henson graphs need s >= 3, got {s}")));
        }
        Ok(TheoryId::Henson(s))
    }

    pub fn is_relational(self) -> bool {
        matches!(self, TheoryId::TR | TheoryId::Henson(_) | TheoryId::RandomGraph)
    }

    pub fn is_graph(self) -> bool {
        matches!(self, TheoryId::Henson(_) | TheoryId::RandomGraph)
    }

    pub fn is_pq(self) -> bool {
        matches!(self, TheoryId::THalfInf | TheoryId::THalfInfPQ)
    }

    /// Sort given to identifiers that nothing else constrains.
    pub fn default_sort(self) -> Sort {
        if self.is_relational() {
            Sort::Vertex
        } else {
            Sort::P
        }
    }

    pub fn allows_sort(self, s: Sort) -> bool {
        match self {
            TheoryId::TR | TheoryId::Henson(_) | TheoryId::RandomGraph => s == Sort::Vertex,
            TheoryId::THalf | TheoryId::THalfInfPQ => matches!(s, Sort::P | Sort::Q),
            TheoryId::THalfInf => matches!(s, Sort::P | Sort::Q | Sort::R),
        }
    }
}

impl fmt::Display for TheoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TheoryId::TR => f.write_str("tr"),
            TheoryId::Henson(s) => write!(f, "henson {s}"),
            TheoryId::RandomGraph => f.write_str("random-graph"),
            TheoryId::THalf => f.write_str("thalf"),
            TheoryId::THalfInf => f.write_str("thalf-inf"),
            TheoryId::THalfInfPQ => f.write_str("thalf-inf-pq"),
        }
    }
}

impl FromStr for TheoryId {
    type Err = Error;

    fn from_str(s: &str) -> Result<TheoryId> {
        let words: Vec<&str> = s.split(|c: char| c.is_whitespace() || c == ':' || c == '=').filter(|w| !w.is_empty()).collect();
        match words.as_slice() {
            ["tr"] => Ok(TheoryId::TR),
            ["random-graph"] | ["rg"] => Ok(TheoryId::RandomGraph),
            ["thalf"] => Ok(TheoryId::THalf),
            ["thalf-inf"] => Ok(TheoryId::THalfInf),
            ["thalf-inf-pq"] => Ok(TheoryId::THalfInfPQ),
            ["henson", n] => {
                let s: usize = n.parse().map_err(|_| Error::Parse { pos: 0, msg: format!("bad Henson size `{n}`") })?;
                TheoryId::henson(s)
            }
            _ => Err(Error::Parse { pos: 0, msg: format!("unknown theory `{s}`") }),
        }
    }
}

/// A standard-model element.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Vertex(usize),
    /// A point of `THalfInf`.
    Point(PElem),
    /// A point of `THalf`.
    Unit(Rational),
    Q(QElem),
    Half(HalfSet),
    Real(Rational),
}

impl Value {
    pub fn sort(&self) -> Sort {
        match self {
            Value::Vertex(_) => Sort::Vertex,
            Value::Point(_) | Value::Unit(_) => Sort::P,
            Value::Q(_) | Value::Half(_) => Sort::Q,
            Value::Real(_) => Sort::R,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Vertex(v) => write!(f, "v{v}"),
            Value::Point(p) => write!(f, "{p}"),
            Value::Unit(a) | Value::Real(a) => f.write_str(&fmt_rat(a)),
            Value::Q(q) => write!(f, "{q}"),
            Value::Half(h) => write!(f, "{h}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theory_names_round_trip() {
        for t in [
            TheoryId::TR,
            TheoryId::Henson(4),
            TheoryId::RandomGraph,
            TheoryId::THalf,
            TheoryId::THalfInf,
            TheoryId::THalfInfPQ,
        ] {
            assert_eq!(t.to_string().parse::<TheoryId>().unwrap(), t);
        }
        assert!("henson 2".parse::<TheoryId>().is_err());
    }
}
