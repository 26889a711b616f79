//! Finite unions of half-open rational intervals inside `[0,1)`.

use std::fmt;

use crate::error::{pre, Error, Result};
use crate::scalar::Exact;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IntervalUnion<S> {
    ivs: Vec<(S, S)>,
}

impl<S: Exact> IntervalUnion<S> {
    pub fn empty() -> Self {
        IntervalUnion { ivs: Vec::new() }
    }

    pub fn full() -> Self {
        IntervalUnion { ivs: vec![(S::zero(), S::one())] }
    }

    pub fn interval(a: S, b: S) -> Result<Self> {
        Self::new(vec![(a, b)])
    }

    /// Builds a canonical union; every pair must satisfy `0 <= a <= b <= 1`.
    pub fn new(mut ivs: Vec<(S, S)>) -> Result<Self> {
        for (a, b) in &ivs {
            if a.is_negative() || *b > S::one() || a > b {
                return pre(format!("[{a},{b}) is not a subinterval of [0,1)"));
            }
        }
        ivs.retain(|(a, b)| a < b);
        ivs.sort();
        let mut out: Vec<(S, S)> = Vec::with_capacity(ivs.len());
        for (a, b) in ivs {
            match out.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => out.push((a, b)),
            }
        }
        Ok(IntervalUnion { ivs: out })
    }

    pub fn intervals(&self) -> &[(S, S)] {
        &self.ivs
    }

    pub fn is_empty(&self) -> bool {
        self.ivs.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.ivs.len() == 1 && self.ivs[0].0.is_zero() && self.ivs[0].1.is_one()
    }

    pub fn measure(&self) -> S {
        self.ivs.iter().fold(S::zero(), |acc, (a, b)| acc + b.clone() - a.clone())
    }

    pub fn contains(&self, x: &S) -> bool {
        let i = self.ivs.partition_point(|(a, _)| a <= x);
        i > 0 && *x < self.ivs[i - 1].1
    }

    /// The interval of the union containing `x`.
    pub fn component(&self, x: &S) -> Option<&(S, S)> {
        let i = self.ivs.partition_point(|(a, _)| a <= x);
        (i > 0 && *x < self.ivs[i - 1].1).then(|| &self.ivs[i - 1])
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut cur = S::zero();
        for (a, b) in &self.ivs {
            if cur < *a {
                out.push((cur.clone(), a.clone()));
            }
            cur = b.clone();
        }
        if cur < S::one() {
            out.push((cur, S::one()));
        }
        IntervalUnion { ivs: out }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.ivs.clone();
        all.extend(other.ivs.iter().cloned());
        Self::new(all).expect("subintervals of [0,1)")
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.ivs.len() && j < other.ivs.len() {
            let (a, b) = &self.ivs[i];
            let (c, d) = &other.ivs[j];
            let lo = if a > c { a } else { c };
            let hi = if b < d { b } else { d };
            if lo < hi {
                out.push((lo.clone(), hi.clone()));
            }
            if b < d {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalUnion { ivs: out }
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.intersect(&other.complement())
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.difference(other).is_empty()
    }

    /// All interval endpoints, sorted and deduplicated.
    pub fn endpoints(&self) -> Vec<S> {
        let mut out: Vec<S> = self.ivs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
        out.dedup();
        out
    }

    pub fn to_big(&self) -> IntervalUnion<crate::Rational> {
        IntervalUnion { ivs: self.ivs.iter().map(|(a, b)| (a.to_big(), b.to_big())).collect() }
    }
}

/// Elementary intervals cut out of `[0,1)` by a set of breakpoints.
pub fn elementary<S: Exact>(breaks: impl IntoIterator<Item = S>) -> Vec<(S, S)> {
    let mut pts: Vec<S> = breaks.into_iter().filter(|p| p.is_positive() && *p < S::one()).collect();
    pts.push(S::zero());
    pts.push(S::one());
    pts.sort();
    pts.dedup();
    pts.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect()
}

impl<S: Exact> fmt::Display for IntervalUnion<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ivs.is_empty() {
            return f.write_str("{}");
        }
        for (i, (a, b)) in self.ivs.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "[{},{})", crate::scalar::fmt_rat(a), crate::scalar::fmt_rat(b))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for IntervalUnion<crate::Rational> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "{}" {
            return Ok(Self::empty());
        }
        let mut ivs = Vec::new();
        for part in s.split('+') {
            let p = part.trim();
            let inner = p
                .strip_prefix('[')
                .and_then(|p| p.strip_suffix(')'))
                .ok_or_else(|| Error::Parse { pos: 0, msg: format!("bad interval `{p}`") })?;
            let (a, b) = inner
                .split_once(',')
                .ok_or_else(|| Error::Parse { pos: 0, msg: format!("bad interval `{p}`") })?;
            ivs.push((crate::scalar::parse_rat(a)?, crate::scalar::parse_rat(b)?));
        }
        Self::new(ivs)
    }
}

/// A subset `Y` with `A ⊂ Y ⊊ X` and `measure(Y) = r`.
///
/// Each point of `A` receives a short interval to its right, then the
/// remaining mass is filled from the left end of `X`.
pub fn carve_interval_subset<S: Exact>(
    x: &IntervalUnion<S>,
    points: &[S],
    r: &S,
) -> Result<IntervalUnion<S>> {
    let total = x.measure();
    if !r.is_positive() || *r >= total {
        return pre(format!("carve mass {r} outside (0, {total})"));
    }
    let mut pts = points.to_vec();
    pts.sort();
    if pts.windows(2).any(|w| w[0] == w[1]) {
        return pre("carve points must be distinct");
    }
    if let Some(p) = pts.iter().find(|p| !x.contains(p)) {
        return pre(format!("carve point {p} lies outside the set"));
    }
    let two = S::from_int(2);
    let share = if pts.is_empty() {
        S::zero()
    } else {
        r.clone() / (two.clone() * S::from_int(pts.len() as i64))
    };
    let mut taken = Vec::new();
    let mut used = S::zero();
    for (i, p) in pts.iter().enumerate() {
        let (_, end) = x.component(p).expect("checked membership");
        let mut room = end.clone() - p.clone();
        if let Some(q) = pts.get(i + 1) {
            let gap = q.clone() - p.clone();
            if gap < room {
                room = gap;
            }
        }
        let half = room / two.clone();
        let d = if half < share { half } else { share.clone() };
        used = used + d.clone();
        taken.push((p.clone(), p.clone() + d));
    }
    let small = IntervalUnion::new(taken)?;
    let mut need = r.clone() - used;
    let mut fill = Vec::new();
    for (a, b) in x.difference(&small).intervals() {
        if !need.is_positive() {
            break;
        }
        let len = b.clone() - a.clone();
        let take = if len < need { len } else { need.clone() };
        need = need - take.clone();
        fill.push((a.clone(), a.clone() + take));
    }
    Ok(small.union(&IntervalUnion::new(fill)?))
}
