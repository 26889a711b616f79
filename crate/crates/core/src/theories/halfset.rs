//! Measured sets of the finite half-measure theory.

use std::fmt;

use num_traits::{One, Zero};

use super::intervals::IntervalUnion;
use crate::error::{pre, Result};
use crate::scalar::{frac, Exact};
use crate::Rational;

/// A union of exactly `n` distinct members of `I_{2n}`.
///
/// Equality and ordering look at the set only; `n` records one valid
/// presentation.
#[derive(Debug, Clone)]
pub struct HalfSet {
    n: usize,
    set: IntervalUnion<Rational>,
}

impl PartialEq for HalfSet {
    fn eq(&self, other: &Self) -> bool {
        self.set == other.set
    }
}

impl Eq for HalfSet {}

impl PartialOrd for HalfSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HalfSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.set.cmp(&other.set)
    }
}

impl std::hash::Hash for HalfSet {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.set.hash(state);
    }
}

/// The `2n` intervals `[k/2n, (k+1)/2n)`.
pub fn half_intervals(n: usize) -> Vec<IntervalUnion<Rational>> {
    let d = 2 * n as i64;
    (0..d).map(|k| IntervalUnion::interval(frac(k, d), frac(k + 1, d)).unwrap()).collect()
}

impl HalfSet {
    pub fn new(n: usize, set: IntervalUnion<Rational>) -> Result<HalfSet> {
        if n == 0 {
            return pre("half sets need n >= 1");
        }
        let step = frac(1, 2 * n as i64);
        for (a, b) in set.intervals() {
            if !(a / &step).is_integer() || !(b / &step).is_integer() {
                return pre(format!("{set} is not a union of members of I_{}", 2 * n));
            }
        }
        if set.measure() != Rational::from_int(1) / Rational::from_int(2) {
            return pre(format!("{set} does not have measure 1/2"));
        }
        Ok(HalfSet { n, set })
    }

    /// Uses the coarsest grid `I_{2n}` the endpoints fit on.
    pub fn from_set(set: IntervalUnion<Rational>) -> Result<HalfSet> {
        let d = set
            .endpoints()
            .iter()
            .fold(num::BigInt::from(1), |acc, e| num::integer::lcm(acc, e.denom().clone()));
        let two = num::BigInt::from(2);
        let n = if &d % &two == num::BigInt::from(0) { d / two } else { d };
        let n: usize = n.try_into().map_err(|_| crate::Error::Limit("grid too fine".into()))?;
        HalfSet::new(n, set)
    }

    /// Builds the set from indices into `I_{2n}`.
    pub fn from_indices(n: usize, idx: &[usize]) -> Result<HalfSet> {
        let ivs = half_intervals(n);
        let mut set = IntervalUnion::empty();
        for &i in idx {
            if i >= 2 * n {
                return pre(format!("interval index {i} out of range"));
            }
            set = set.union(&ivs[i]);
        }
        HalfSet::new(n, set)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn set(&self) -> &IntervalUnion<Rational> {
        &self.set
    }

    pub fn contains(&self, a: &Rational) -> bool {
        self.set.contains(a)
    }
}

impl fmt::Display for HalfSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.set, self.n)
    }
}

/// The union of exactly `n` members of `I_{2n}` hitting every point:
/// the intervals containing the points, padded by the lowest unused indices.
pub fn cover_points(points: &[Rational], n: usize) -> Result<HalfSet> {
    if n == 0 || points.len() > n {
        return pre(format!("cannot cover {} points with n = {n}", points.len()));
    }
    let mut sorted = points.to_vec();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return pre("duplicate points");
    }
    let d = Rational::from_int(2 * n as i64);
    let mut idx = std::collections::BTreeSet::new();
    for a in points {
        unit_point(a)?;
        idx.insert((a * &d).floor().to_integer().try_into().expect("index below 2n"));
    }
    let mut k = 0usize;
    while idx.len() < n {
        idx.insert(k);
        k += 1;
    }
    HalfSet::from_indices(n, &idx.into_iter().collect::<Vec<usize>>())
}

/// A cover of the points, as in [`cover_points`], different from every set in
/// `avoid`. Padding choices are tried in lexicographic order.
pub fn cover_points_avoiding(points: &[Rational], avoid: &[HalfSet]) -> Result<HalfSet> {
    let start = points.len().max(1);
    for n in start..=start + avoid.len() + 1 {
        let base = cover_points(points, n)?;
        let d = Rational::from_int(2 * n as i64);
        let req: std::collections::BTreeSet<usize> =
            points.iter().map(|a| (a * &d).floor().to_integer().try_into().expect("index below 2n")).collect();
        let free: Vec<usize> = (0..2 * n).filter(|i| !req.contains(i)).collect();
        let k = n - req.len();
        let mut pick: Vec<usize> = (0..k).collect();
        loop {
            let idx: Vec<usize> = req.iter().copied().chain(pick.iter().map(|&i| free[i])).collect();
            let h = HalfSet::from_indices(n, &idx)?;
            if !avoid.contains(&h) {
                return Ok(h);
            }
            // next k-subset of `free`
            let Some(i) = (0..k).rev().find(|&i| pick[i] < free.len() - k + i) else { break };
            pick[i] += 1;
            for j in i + 1..k {
                pick[j] = pick[j - 1] + 1;
            }
        }
        debug_assert!(avoid.contains(&base));
    }
    Err(crate::Error::Limit("no unused covering set".into()))
}

pub fn unit_point(a: &Rational) -> Result<()> {
    if *a < Rational::zero() || *a >= Rational::one() {
        return pre(format!("{a} is not in [0,1)"));
    }
    Ok(())
}
