use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};

use super::intervals::IntervalUnion;
use crate::error::{pre, Error, Result};
use crate::scalar::{parse_rat, Exact};
use crate::Rational;

/// An element of the Q sort: bottom, top, or a proper set tagged with its copy index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QElem {
    Bot,
    Top,
    Pair(usize, IntervalUnion<Rational>),
}

impl QElem {
    /// Normalizes empty and full sets to `Bot` and `Top`.
    pub fn pair(n: usize, x: IntervalUnion<Rational>) -> QElem {
        if x.is_empty() {
            QElem::Bot
        } else if x.is_full() {
            QElem::Top
        } else {
            QElem::Pair(n, x)
        }
    }

    pub fn meet(&self, other: &QElem) -> QElem {
        match (self, other) {
            (QElem::Bot, _) | (_, QElem::Bot) => QElem::Bot,
            (QElem::Top, b) | (b, QElem::Top) => b.clone(),
            (QElem::Pair(n, x), QElem::Pair(m, y)) if n == m => QElem::pair(*n, x.intersect(y)),
            _ => QElem::Bot,
        }
    }

    pub fn join(&self, other: &QElem) -> QElem {
        match (self, other) {
            (QElem::Top, _) | (_, QElem::Top) => QElem::Top,
            (QElem::Bot, b) | (b, QElem::Bot) => b.clone(),
            (QElem::Pair(n, x), QElem::Pair(m, y)) if n == m => QElem::pair(*n, x.union(y)),
            _ => QElem::Top,
        }
    }

    pub fn comp(&self) -> QElem {
        match self {
            QElem::Bot => QElem::Top,
            QElem::Top => QElem::Bot,
            QElem::Pair(n, x) => QElem::Pair(*n, x.complement()),
        }
    }

    pub fn sim(&self, other: &QElem) -> bool {
        matches!((self, other), (QElem::Pair(n, _), QElem::Pair(m, _)) if n == m)
    }

    pub fn ell(&self) -> Rational {
        match self {
            QElem::Bot => Rational::zero(),
            QElem::Top => Rational::one(),
            QElem::Pair(_, x) => x.measure(),
        }
    }

    pub fn index(&self) -> Option<usize> {
        match self {
            QElem::Pair(n, _) => Some(*n),
            _ => None,
        }
    }

    /// Membership of a point whose coordinate at this element's index is `coord`.
    pub fn holds_at(&self, coord: impl FnOnce(usize) -> Rational) -> bool {
        match self {
            QElem::Bot => false,
            QElem::Top => true,
            QElem::Pair(n, x) => x.contains(&coord(*n)),
        }
    }
}

impl fmt::Display for QElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QElem::Bot => f.write_str("bot"),
            QElem::Top => f.write_str("top"),
            QElem::Pair(n, x) => write!(f, "{n}:{x}"),
        }
    }
}

impl std::str::FromStr for QElem {
    type Err = Error;

    fn from_str(s: &str) -> Result<QElem> {
        match s.trim() {
            "bot" => Ok(QElem::Bot),
            "top" => Ok(QElem::Top),
            t => {
                let (n, x) = t
                    .split_once(':')
                    .ok_or_else(|| Error::Parse { pos: 0, msg: format!("bad Q value `{t}`") })?;
                let n: usize =
                    n.trim().parse().map_err(|_| Error::Parse { pos: 0, msg: format!("bad index `{n}`") })?;
                Ok(QElem::pair(n, x.parse()?))
            }
        }
    }
}

/// Modulus of the generic coordinate values, the Mersenne prime 2^61 - 1.
const GENERIC_MOD: u128 = (1u128 << 61) - 1;
const GENERIC_MUL: u128 = 0x9E37_79B9_7F4A_7C15 % GENERIC_MOD;

/// A point of the P sort: finitely many fixed coordinates, generic elsewhere.
///
/// Unfixed coordinates take the value `c/(2^61-1)` with `c` an injective code
/// of `(id, coordinate)`; registered fixed values never have that denominator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PElem {
    pub id: u64,
    pub fixed: BTreeMap<usize, Rational>,
}

impl PElem {
    pub fn coord(&self, k: usize) -> Rational {
        match self.fixed.get(&k) {
            Some(v) => v.clone(),
            None => generic_value(self.id, k),
        }
    }
}

fn generic_value(id: u64, k: usize) -> Rational {
    let (a, b) = (id as u128, k as u128);
    let cantor = (a + b) * (a + b + 1) / 2 + b + 1;
    let c = cantor % GENERIC_MOD * GENERIC_MUL % GENERIC_MOD;
    Rational::new((c as u64).into(), (GENERIC_MOD as u64).into())
}

impl fmt::Display for PElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}{{", self.id)?;
        for (i, (k, v)) in self.fixed.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}: {}", crate::scalar::fmt_rat(v))?;
        }
        f.write_str("}")
    }
}

/// Parses `{0: 1/3, 1: 2/5}` into fixed coordinates.
pub fn parse_coords(s: &str) -> Result<BTreeMap<usize, Rational>> {
    let inner = s
        .trim()
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| Error::Parse { pos: 0, msg: format!("bad point `{s}`") })?;
    let mut out = BTreeMap::new();
    for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once(':')
            .ok_or_else(|| Error::Parse { pos: 0, msg: format!("bad coordinate `{part}`") })?;
        let k: usize =
            k.trim().parse().map_err(|_| Error::Parse { pos: 0, msg: format!("bad coordinate `{k}`") })?;
        let v = parse_rat(v)?;
        if !(v >= Rational::zero() && v < Rational::one()) {
            return pre(format!("coordinate value {v} outside [0,1)"));
        }
        out.insert(k, v);
    }
    Ok(out)
}

/// Freshness registry keeping materialized coordinate values injective.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    next_id: u64,
    used: BTreeSet<Rational>,
}

impl Registry {
    /// Registers a point with the given fixed coordinates.
    pub fn point(&mut self, fixed: BTreeMap<usize, Rational>) -> Result<PElem> {
        for v in fixed.values() {
            if !self.used.insert(v.clone()) {
                return pre(format!("coordinate value {v} already used by another point"));
            }
        }
        let id = self.next_id;
        self.next_id += 1;
        Ok(PElem { id, fixed })
    }

    /// A dyadic value inside `x` not used before.
    pub fn fresh_in(&mut self, x: &IntervalUnion<Rational>) -> Result<Rational> {
        let (a, b) = x.intervals().first().ok_or_else(|| Error::Precondition("empty set".into()))?;
        let two = Rational::from_int(2);
        let mut lo = a.clone();
        let mut v = (a + b) / &two;
        while self.used.contains(&v) || self.near_generic(&v) {
            lo = v.clone();
            v = (&lo + b) / &two;
        }
        let _ = lo;
        self.used.insert(v.clone());
        Ok(v)
    }

    /// A new point with a fresh coordinate inside each given set.
    pub fn point_in(&mut self, cells: &BTreeMap<usize, IntervalUnion<Rational>>) -> Result<PElem> {
        let mut fixed = BTreeMap::new();
        for (k, x) in cells {
            fixed.insert(*k, self.fresh_in(x)?);
        }
        let id = self.next_id;
        self.next_id += 1;
        Ok(PElem { id, fixed })
    }

    fn near_generic(&self, v: &Rational) -> bool {
        *v.denom() == num::BigInt::from(GENERIC_MOD as u64)
    }

    pub fn mark_used(&mut self, v: Rational) {
        self.used.insert(v);
    }
}
