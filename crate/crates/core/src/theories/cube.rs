//! Cylinder sets of `[0,1)^N` and their decomposition into disjoint cubes.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use super::intervals::{elementary, IntervalUnion};
use crate::Rational;

/// Boolean combination of coordinate-membership sets `{a : a(k) ∈ X}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MemberExpr {
    True,
    False,
    In(usize, IntervalUnion<Rational>),
    Not(Box<MemberExpr>),
    And(Vec<MemberExpr>),
    Or(Vec<MemberExpr>),
}

impl MemberExpr {
    pub fn member(k: usize, x: IntervalUnion<Rational>) -> MemberExpr {
        if x.is_empty() {
            MemberExpr::False
        } else if x.is_full() {
            MemberExpr::True
        } else {
            MemberExpr::In(k, x)
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: MemberExpr) -> MemberExpr {
        match e {
            MemberExpr::True => MemberExpr::False,
            MemberExpr::False => MemberExpr::True,
            MemberExpr::Not(inner) => *inner,
            e => MemberExpr::Not(Box::new(e)),
        }
    }

    pub fn and(parts: Vec<MemberExpr>) -> MemberExpr {
        let mut out = Vec::new();
        for p in parts {
            match p {
                MemberExpr::True => {}
                MemberExpr::False => return MemberExpr::False,
                MemberExpr::And(inner) => out.extend(inner),
                e => out.push(e),
            }
        }
        match out.len() {
            0 => MemberExpr::True,
            1 => out.pop().unwrap(),
            _ => MemberExpr::And(out),
        }
    }

    pub fn or(parts: Vec<MemberExpr>) -> MemberExpr {
        let mut out = Vec::new();
        for p in parts {
            match p {
                MemberExpr::False => {}
                MemberExpr::True => return MemberExpr::True,
                MemberExpr::Or(inner) => out.extend(inner),
                e => out.push(e),
            }
        }
        match out.len() {
            0 => MemberExpr::False,
            1 => out.pop().unwrap(),
            _ => MemberExpr::Or(out),
        }
    }

    pub fn coords(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect(&mut |k, _| {
            out.insert(k);
        });
        out
    }

    fn collect(&self, f: &mut impl FnMut(usize, &IntervalUnion<Rational>)) {
        match self {
            MemberExpr::In(k, x) => f(*k, x),
            MemberExpr::Not(e) => e.collect(f),
            MemberExpr::And(es) | MemberExpr::Or(es) => es.iter().for_each(|e| e.collect(f)),
            _ => {}
        }
    }

    pub fn holds(&self, coord: &impl Fn(usize) -> Rational) -> bool {
        match self {
            MemberExpr::True => true,
            MemberExpr::False => false,
            MemberExpr::In(k, x) => x.contains(&coord(*k)),
            MemberExpr::Not(e) => !e.holds(coord),
            MemberExpr::And(es) => es.iter().all(|e| e.holds(coord)),
            MemberExpr::Or(es) => es.iter().any(|e| e.holds(coord)),
        }
    }

    /// Decides coordinate `k` at value `v` and folds constants.
    fn fix(&self, k: usize, v: &Rational) -> MemberExpr {
        match self {
            MemberExpr::In(j, x) if *j == k => {
                if x.contains(v) {
                    MemberExpr::True
                } else {
                    MemberExpr::False
                }
            }
            MemberExpr::Not(e) => MemberExpr::not(e.fix(k, v)),
            MemberExpr::And(es) => MemberExpr::and(es.iter().map(|e| e.fix(k, v)).collect()),
            MemberExpr::Or(es) => MemberExpr::or(es.iter().map(|e| e.fix(k, v)).collect()),
            e => e.clone(),
        }
    }
}

/// A product of interval unions, `[0,1)` on every unconstrained coordinate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Cube {
    pub constraints: BTreeMap<usize, IntervalUnion<Rational>>,
}

impl Cube {
    pub fn full() -> Cube {
        Cube::default()
    }

    pub fn fiber(&self, k: usize) -> IntervalUnion<Rational> {
        self.constraints.get(&k).cloned().unwrap_or_else(IntervalUnion::full)
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.values().any(IntervalUnion::is_empty)
    }

    /// Product Lebesgue measure.
    pub fn measure(&self) -> Rational {
        self.constraints.values().fold(Rational::one(), |acc, x| acc * x.measure())
    }

    pub fn contains(&self, coord: &impl Fn(usize) -> Rational) -> bool {
        self.constraints.iter().all(|(k, x)| x.contains(&coord(*k)))
    }

    pub fn intersect(&self, other: &Cube) -> Cube {
        let mut out = self.clone();
        for (k, x) in &other.constraints {
            let cur = out.fiber(*k);
            out.constraints.insert(*k, cur.intersect(x));
        }
        out
    }
}

/// Partitions `[0,1)^N` into cubes on which `Σ w_i·1_{f_i}` is constant.
///
/// Coordinates are split one at a time into elementary intervals; intervals
/// leaving identical residual functions are merged into one fiber.
pub fn cube_decompose(terms: &[(MemberExpr, Rational)]) -> Vec<(Cube, Rational)> {
    let coords: BTreeSet<usize> = terms.iter().flat_map(|(e, _)| e.coords()).collect();
    let coords: Vec<usize> = coords.into_iter().collect();
    let mut out = Vec::new();
    split(terms.to_vec(), &coords, Cube::full(), &mut out);
    out
}

fn split(
    terms: Vec<(MemberExpr, Rational)>,
    coords: &[usize],
    cube: Cube,
    out: &mut Vec<(Cube, Rational)>,
) {
    let Some((&k, rest)) = coords.split_first() else {
        let level = terms
            .iter()
            .filter(|(e, _)| *e == MemberExpr::True)
            .fold(Rational::zero(), |acc, (_, w)| acc + w);
        out.push((cube, level));
        return;
    };
    let mut breaks = Vec::new();
    for (e, _) in &terms {
        e.collect(&mut |j, x| {
            if j == k {
                breaks.extend(x.endpoints());
            }
        });
    }
    if breaks.is_empty() {
        split(terms, rest, cube, out);
        return;
    }
    let mut groups: BTreeMap<Vec<(MemberExpr, Rational)>, Vec<(Rational, Rational)>> = BTreeMap::new();
    for (a, b) in elementary(breaks) {
        let residual: Vec<(MemberExpr, Rational)> =
            terms.iter().map(|(e, w)| (e.fix(k, &a), w.clone())).collect();
        groups.entry(residual).or_default().push((a, b));
    }
    for (residual, ivs) in groups {
        let mut c = cube.clone();
        let fiber = IntervalUnion::new(ivs).expect("elementary intervals are valid");
        if !fiber.is_full() {
            c.constraints.insert(k, fiber);
        }
        split(residual, rest, c, out);
    }
}

/// Product-measure integral of a weighted simple function.
pub fn integrate(terms: &[(MemberExpr, Rational)]) -> Rational {
    cube_decompose(terms)
        .iter()
        .filter(|(_, w)| !w.is_zero())
        .fold(Rational::zero(), |acc, (c, w)| acc + c.measure() * w)
}

pub fn set_measure(e: &MemberExpr) -> Rational {
    integrate(&[(e.clone(), Rational::one())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::frac;

    fn iu(s: &str) -> IntervalUnion<Rational> {
        s.parse().unwrap()
    }

    #[test]
    fn independent_coordinates_give_one_cube() {
        let e = MemberExpr::and(vec![
            MemberExpr::member(0, iu("[0,1/2)")),
            MemberExpr::not(MemberExpr::member(1, iu("[0,1/2)"))),
        ]);
        let cubes: Vec<_> = cube_decompose(&[(e.clone(), Rational::one())])
            .into_iter()
            .filter(|(_, w)| w.is_one())
            .collect();
        assert_eq!(cubes.len(), 1);
        assert_eq!(cubes[0].0.fiber(0), iu("[0,1/2)"));
        assert_eq!(cubes[0].0.fiber(1), iu("[1/2,1)"));
        assert_eq!(set_measure(&e), frac(1, 4));
    }

    #[test]
    fn tautology_is_the_full_cube() {
        let a = MemberExpr::member(0, iu("[1/3,2/3)"));
        let e = MemberExpr::or(vec![a.clone(), MemberExpr::not(a)]);
        let cubes = cube_decompose(&[(e, Rational::one())]);
        assert_eq!(cubes, vec![(Cube::full(), Rational::one())]);
    }

    #[test]
    fn sum_of_overlapping_indicators() {
        let terms = vec![
            (MemberExpr::member(0, iu("[0,1/2)")), Rational::one()),
            (MemberExpr::member(0, iu("[1/4,3/4)")), Rational::one()),
        ];
        let cubes = cube_decompose(&terms);
        assert!(cubes.len() <= 4);
        let levels: BTreeSet<Rational> = cubes.iter().map(|(_, w)| w.clone()).collect();
        assert_eq!(levels, [frac(0, 1), frac(1, 1), frac(2, 1)].into());
        assert_eq!(integrate(&terms), Rational::one());
    }
}
