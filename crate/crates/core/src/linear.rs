//! Fourier–Motzkin elimination over ordered fields.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::scalar::Exact;

/// Relation of a constraint's left side to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Eq,
    Lt,
    Le,
}

/// `Σ coeffs[k]·k + constant  rel  0`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint<K: Ord, S> {
    pub coeffs: BTreeMap<K, S>,
    pub constant: S,
    pub rel: Rel,
}

impl<K: Ord + Clone, S: Exact> Constraint<K, S> {
    pub fn new(coeffs: BTreeMap<K, S>, constant: S, rel: Rel) -> Self {
        let coeffs = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Constraint { coeffs, constant, rel }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Truth value of a constraint without variables.
    pub fn decide(&self) -> Option<bool> {
        if !self.is_constant() {
            return None;
        }
        Some(match self.rel {
            Rel::Eq => self.constant.is_zero(),
            Rel::Lt => self.constant.is_negative(),
            Rel::Le => !self.constant.is_positive(),
        })
    }

    pub fn coeff(&self, k: &K) -> S {
        self.coeffs.get(k).cloned().unwrap_or_else(S::zero)
    }

    pub fn holds(&self, value: &impl Fn(&K) -> S) -> bool {
        let mut acc = self.constant.clone();
        for (k, c) in &self.coeffs {
            acc = acc + c.clone() * value(k);
        }
        Constraint::<K, S>::new(BTreeMap::new(), acc, self.rel).decide().unwrap()
    }

    fn scale(&self, f: &S) -> Self {
        Constraint {
            coeffs: self.coeffs.iter().map(|(k, c)| (k.clone(), c.clone() * f.clone())).collect(),
            constant: self.constant.clone() * f.clone(),
            rel: self.rel,
        }
    }

    fn add(&self, other: &Self, rel: Rel) -> Self {
        let mut coeffs = self.coeffs.clone();
        for (k, c) in &other.coeffs {
            let slot = coeffs.entry(k.clone()).or_insert_with(S::zero);
            *slot = slot.clone() + c.clone();
        }
        Constraint::new(coeffs, self.constant.clone() + other.constant.clone(), rel)
    }

    /// Scales so the leading coefficient has absolute value one (equalities
    /// also get a positive leading coefficient).
    pub fn normalized(&self) -> Self {
        let Some(lead) = self.coeffs.values().next().cloned() else {
            return self.clone();
        };
        let f = if self.rel == Rel::Eq { S::one() / lead } else { S::one() / lead.abs() };
        self.scale(&f)
    }

    /// Replaces `k` by `expr` (given as coefficients plus constant).
    pub fn substitute(&self, k: &K, coeffs: &BTreeMap<K, S>, constant: &S) -> Self {
        let c = self.coeff(k);
        if c.is_zero() {
            return self.clone();
        }
        let mut rest = self.clone();
        rest.coeffs.remove(k);
        let repl = Constraint { coeffs: coeffs.clone(), constant: constant.clone(), rel: self.rel }.scale(&c);
        rest.add(&repl, self.rel)
    }
}

impl<K: Ord + fmt::Display, S: Exact> fmt::Display for Constraint<K, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in &self.coeffs {
            write!(f, "{}*{} + ", crate::scalar::fmt_rat(c), k)?;
        }
        let r = match self.rel {
            Rel::Eq => "=",
            Rel::Lt => "<",
            Rel::Le => "<=",
        };
        write!(f, "{} {r} 0", crate::scalar::fmt_rat(&self.constant))
    }
}

/// Drops trivially true constraints and duplicates; `None` if some constant
/// constraint is false.
pub fn simplify<K: Ord + Clone, S: Exact>(cs: Vec<Constraint<K, S>>) -> Option<Vec<Constraint<K, S>>> {
    let mut out = BTreeSet::new();
    for c in cs {
        match c.decide() {
            Some(true) => {}
            Some(false) => return None,
            None => {
                out.insert(c.normalized());
            }
        }
    }
    Some(out.into_iter().collect())
}

/// Projects the solution set onto the remaining variables.
///
/// Returns `None` when the system becomes visibly infeasible.
pub fn eliminate<K: Ord + Clone, S: Exact>(cs: &[Constraint<K, S>], v: &K) -> Option<Vec<Constraint<K, S>>> {
    if let Some(eq) = cs.iter().find(|c| c.rel == Rel::Eq && !c.coeff(v).is_zero()) {
        let c = eq.coeff(v);
        let inv = -(S::one() / c);
        let mut coeffs: BTreeMap<K, S> =
            eq.coeffs.iter().filter(|(k, _)| *k != v).map(|(k, x)| (k.clone(), x.clone() * inv.clone())).collect();
        coeffs.retain(|_, x| !x.is_zero());
        let constant = eq.constant.clone() * inv;
        let out = cs.iter().filter(|c| *c != eq).map(|c| c.substitute(v, &coeffs, &constant)).collect();
        return simplify(out);
    }
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut rest = Vec::new();
    for c in cs {
        let a = c.coeff(v);
        if a.is_zero() {
            rest.push(c.clone());
        } else {
            let scaled = c.scale(&(S::one() / a.abs()));
            if a.is_positive() {
                upper.push(scaled);
            } else {
                lower.push(scaled);
            }
        }
    }
    for l in &lower {
        for u in &upper {
            let rel = if l.rel == Rel::Lt || u.rel == Rel::Lt { Rel::Lt } else { Rel::Le };
            rest.push(l.add(u, rel));
        }
    }
    simplify(rest)
}

pub fn variables<K: Ord + Clone, S>(cs: &[Constraint<K, S>]) -> BTreeSet<K> {
    cs.iter().flat_map(|c| c.coeffs.keys().cloned()).collect()
}

pub fn feasible<K: Ord + Clone, S: Exact>(cs: &[Constraint<K, S>]) -> bool {
    let Some(mut cur) = simplify(cs.to_vec()) else {
        return false;
    };
    while let Some(v) = variables(&cur).into_iter().next() {
        match eliminate(&cur, &v) {
            Some(next) => cur = next,
            None => return false,
        }
    }
    true
}

/// A rational solution, chosen by back-substitution at bound midpoints.
pub fn solve<K: Ord + Clone, S: Exact>(cs: &[Constraint<K, S>]) -> Option<BTreeMap<K, S>> {
    let mut stages = vec![simplify(cs.to_vec())?];
    let order: Vec<K> = variables(&stages[0]).into_iter().collect();
    for v in &order {
        let next = eliminate(stages.last().unwrap(), v)?;
        stages.push(next);
    }
    let mut sol: BTreeMap<K, S> = BTreeMap::new();
    for (i, v) in order.iter().enumerate().rev() {
        let value = |k: &K| sol.get(k).cloned().unwrap_or_else(S::zero);
        let mut lo: Option<S> = None;
        let mut hi: Option<S> = None;
        let mut exact: Option<S> = None;
        for c in &stages[i] {
            let a = c.coeff(v);
            if a.is_zero() {
                continue;
            }
            let mut rest = c.constant.clone();
            for (k, x) in &c.coeffs {
                if k != v {
                    rest = rest + x.clone() * value(k);
                }
            }
            let bound = -(rest / a.clone());
            match (c.rel, a.is_positive()) {
                (Rel::Eq, _) => exact = Some(bound),
                (_, true) => hi = Some(hi.map_or(bound.clone(), |h| if bound < h { bound.clone() } else { h })),
                (_, false) => lo = Some(lo.map_or(bound.clone(), |l| if bound > l { bound.clone() } else { l })),
            }
        }
        let x = match (exact, lo, hi) {
            (Some(e), _, _) => e,
            (None, Some(l), Some(h)) => (l + h) / S::from_int(2),
            (None, Some(l), None) => l + S::one(),
            (None, None, Some(h)) => h - S::one(),
            (None, None, None) => S::zero(),
        };
        sol.insert(v.clone(), x);
    }
    cs.iter().all(|c| c.holds(&|k| sol.get(k).cloned().unwrap_or_else(S::zero))).then_some(sol)
}
