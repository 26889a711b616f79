//! Approximation by averages: Av-errors, fam search, approximation-sequence
//! checks, concentration bounds and the fim convexity identity.
//!
//! The supremum over parameters `b` in `|μ(φ(x,b)) − Av(ā)(φ(x,b))|` is taken
//! over instances representable at fragment scale, see [`parameter_instances`].

use std::collections::{BTreeMap, BTreeSet};

use num::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{pre, Result};
use crate::formula::{Atom, Formula, Sort, Term};
use crate::measures::{convex_combine, Measure};
use crate::morley::{bind, name_for, pattern_product_eval, power_eval, relevance, with_names, Report};
use crate::scalar::{frac, Exact};
use crate::theories::cube::cube_decompose;
use crate::theories::{Env, Fragment, IntervalUnion, MemberExpr, QElem, TheoryId, Value};
use crate::types::{enumerate_cells, enumerate_types_capped, DEFAULT_TYPE_CAP};
use crate::Rational;

/// Most parameter tuples [`parameter_instances`] will build.
pub const MAX_INSTANCES: usize = 200_000;

/// `φ(x, b)` for one representative parameter tuple `b`, over a fragment that
/// names `b`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub frag: Fragment,
    pub formula: Formula,
}

/// Representatives for every parameter tuple that matters to `μ` and to the
/// `extra` elements on `φ(x; ȳ)`.
///
/// Relational theories use one realization per cell of the atoms the fibers
/// can see (all complete types when `μ` is not built from points and generic
/// types). `THalfInf` uses the fragment's elements and those of `extra`, their
/// complements, `bot`, `top`, a fresh element in a new copy, and a point in
/// each cube cut out by all of these. `THalf` uses the fragment's elements,
/// `extra`, and every interval endpoint as a point.
pub fn parameter_instances(mu: &Measure, x: &str, phi: &Formula, extra: &[Value], frag: &Fragment) -> Result<Vec<Instance>> {
    let free = phi.free_vars();
    if let Some(v) = free.keys().find(|v| *v != x && !frag.theory.allows_sort(free[*v])) {
        return pre(format!("variable `{v}` has a sort outside {}", frag.theory));
    }
    let ys: Vec<String> = free.keys().filter(|v| *v != x).cloned().collect();
    let frag = with_names(frag, extra)?;
    if ys.is_empty() {
        return Ok(vec![Instance { frag, formula: phi.clone() }]);
    }
    let th = frag.theory;
    if th.is_relational() {
        relational_instances(mu, x, &ys, phi, extra, &frag)
    } else {
        let cands = match th {
            TheoryId::THalf => thalf_candidates(&frag, extra)?,
            _ => pq_candidates(&frag, extra)?,
        };
        let mut work = frag.clone();
        let mut named: BTreeMap<Value, String> = BTreeMap::new();
        for vs in cands.values() {
            for v in vs {
                let name = name_for(&mut work, v)?;
                named.insert(v.clone(), name);
            }
        }
        let mut rows: Vec<BTreeMap<String, Term>> = vec![BTreeMap::new()];
        for y in &ys {
            let sort = free[y];
            let opts = cands.get(&sort).cloned().unwrap_or_default();
            let mut next = Vec::new();
            for r in &rows {
                for v in &opts {
                    let mut r2 = r.clone();
                    r2.insert(y.clone(), Term::param(&named[v], sort));
                    next.push(r2);
                }
            }
            if next.len() > MAX_INSTANCES {
                return Err(crate::Error::Limit(format!("more than {MAX_INSTANCES} parameter instances")));
            }
            rows = next;
        }
        Ok(rows.into_iter().map(|r| Instance { frag: work.clone(), formula: phi.substitute(&r) }).collect())
    }
}

fn relational_instances(
    mu: &Measure,
    x: &str,
    ys: &[String],
    phi: &Formula,
    extra: &[Value],
    frag: &Fragment,
) -> Result<Vec<Instance>> {
    let xs = [x.to_string()];
    let mut atoms: Option<BTreeSet<Atom>> = relevance(mu, &xs, ys, phi, frag).map(|a| a.into_iter().collect());
    if !extra.is_empty() {
        let av = Measure::Average(extra.to_vec());
        match (&mut atoms, relevance(&av, &xs, ys, phi, frag)) {
            (Some(a), Some(b)) => a.extend(b),
            _ => atoms = None,
        }
    }
    let cells = match atoms {
        Some(a) => enumerate_cells(frag, ys, &a.into_iter().collect::<Vec<_>>(), DEFAULT_TYPE_CAP)?,
        None => enumerate_types_capped(frag, ys, DEFAULT_TYPE_CAP)?.types,
    };
    let mut out = Vec::new();
    for c in cells {
        let Some((g, env)) = c.realize(frag)? else { continue };
        let vals: Vec<Value> = ys.iter().map(|y| env[y].clone()).collect();
        let (g, formula) = bind(&g, ys, &vals, phi)?;
        out.push(Instance { frag: g, formula });
    }
    Ok(out)
}

fn pq_candidates(frag: &Fragment, extra: &[Value]) -> Result<BTreeMap<Sort, Vec<Value>>> {
    let mut qs: BTreeSet<QElem> = BTreeSet::new();
    let mut ps: Vec<Value> = Vec::new();
    for v in frag.params().map(|(_, v)| v).chain(extra) {
        match v {
            Value::Q(q) => {
                qs.insert(q.comp());
                qs.insert(q.clone());
            }
            Value::Point(_) => {
                if !ps.contains(v) {
                    ps.push(v.clone());
                }
            }
            _ => {}
        }
    }
    let mut work = frag.clone();
    let fresh = work.fresh_index();
    qs.insert(QElem::Bot);
    qs.insert(QElem::Top);
    qs.insert(QElem::pair(fresh, IntervalUnion::interval(Rational::zero(), frac(1, 2))?));
    let members: Vec<(MemberExpr, Rational)> = qs
        .iter()
        .filter_map(|q| match q {
            QElem::Pair(n, x) => Some((MemberExpr::member(*n, x.clone()), Rational::one())),
            _ => None,
        })
        .collect();
    for (cube, _) in cube_decompose(&members) {
        if !cube.measure().is_zero() {
            ps.push(Value::Point(work.registry.point_in(&cube.constraints)?));
        }
    }
    let mut out = BTreeMap::new();
    out.insert(Sort::P, ps);
    out.insert(Sort::Q, qs.into_iter().map(Value::Q).collect());
    Ok(out)
}

fn thalf_candidates(frag: &Fragment, extra: &[Value]) -> Result<BTreeMap<Sort, Vec<Value>>> {
    let mut ps: BTreeSet<Rational> = BTreeSet::new();
    let mut qs: Vec<Value> = Vec::new();
    ps.insert(Rational::zero());
    for v in frag.params().map(|(_, v)| v).chain(extra) {
        match v {
            Value::Unit(a) => {
                ps.insert(a.clone());
            }
            Value::Half(h) => {
                ps.extend(h.set().endpoints().into_iter().filter(|e| *e < Rational::one()));
                if !qs.contains(v) {
                    qs.push(v.clone());
                }
            }
            _ => {}
        }
    }
    let mut out = BTreeMap::new();
    out.insert(Sort::P, ps.into_iter().map(Value::Unit).collect());
    out.insert(Sort::Q, qs);
    Ok(out)
}

/// Truth of each instance at each element: `table[i][k]` is `φ(a_k, b_i)`.
fn truth_table(x: &str, insts: &[Instance], elems: &[Value]) -> Result<Vec<Vec<bool>>> {
    insts
        .iter()
        .map(|inst| {
            elems
                .iter()
                .map(|a| {
                    let mut env = Env::new();
                    env.insert(x.to_string(), a.clone());
                    inst.frag.eval(&inst.formula, &env)
                })
                .collect()
        })
        .collect()
}

fn mu_values(mu: &Measure, x: &str, insts: &[Instance]) -> Result<Vec<Rational>> {
    let xs = [x.to_string()];
    insts.iter().map(|i| mu.eval(&xs, &i.formula, &i.frag)).collect()
}

/// The Av-error with the instance attaining it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvError {
    pub value: Rational,
    pub witness: Formula,
}

/// `max_b |μ(φ(x,b)) − Av(ā)(φ(x,b))|` over the representable instances `b`.
pub fn av_error(mu: &Measure, x: &str, abar: &[Value], phi: &Formula, frag: &Fragment) -> Result<AvError> {
    if abar.is_empty() {
        return pre("Av of an empty tuple");
    }
    let insts = parameter_instances(mu, x, phi, abar, frag)?;
    let table = truth_table(x, &insts, abar)?;
    let mv = mu_values(mu, x, &insts)?;
    let n = Rational::from_int(abar.len() as i64);
    let mut best: Option<AvError> = None;
    for (i, row) in table.iter().enumerate() {
        let hits = Rational::from_int(row.iter().filter(|&&b| b).count() as i64);
        let e = (&mv[i] - hits / &n).abs();
        if best.as_ref().is_none_or(|b| e > b.value) {
            best = Some(AvError { value: e, witness: insts[i].formula.clone() });
        }
    }
    best.ok_or_else(|| crate::Error::Precondition("no parameter instances".into()))
}

/// Fragment parameters of the sort of `x` together with their values.
pub fn elements_for(frag: &Fragment, sort: Sort) -> Vec<(String, Value)> {
    frag.params().filter(|(_, v)| v.sort() == sort).map(|(n, v)| (n.clone(), v.clone())).collect()
}

/// The lexicographically first tuple of fragment elements (repetition
/// allowed, sizes `1..=n_max`) whose Av-error is below `eps`.
pub fn fam_search(
    mu: &Measure,
    x: &str,
    sort: Sort,
    phi: &Formula,
    eps: &Rational,
    frag: &Fragment,
    n_max: usize,
) -> Result<Option<(Vec<String>, Rational)>> {
    if !eps.is_positive() {
        return pre("eps must be positive");
    }
    let elems = elements_for(frag, sort);
    if elems.is_empty() {
        return Ok(None);
    }
    let vals: Vec<Value> = elems.iter().map(|(_, v)| v.clone()).collect();
    let insts = parameter_instances(mu, x, phi, &vals, frag)?;
    let table = truth_table(x, &insts, &vals)?;
    let mv = mu_values(mu, x, &insts)?;
    let m = elems.len();
    for n in 1..=n_max {
        let nr = Rational::from_int(n as i64);
        let mut idx = vec![0usize; n];
        let mut hits = vec![0i64; insts.len()];
        for (i, row) in table.iter().enumerate() {
            hits[i] = n as i64 * row[0] as i64;
        }
        loop {
            let err = hits
                .iter()
                .zip(&mv)
                .map(|(h, v)| (v - Rational::from_int(*h) / &nr).abs())
                .max()
                .unwrap_or_else(Rational::zero);
            if &err < eps {
                return Ok(Some((idx.iter().map(|&k| elems[k].0.clone()).collect(), err)));
            }
            // next non-decreasing index sequence
            let Some(p) = (0..n).rev().find(|&p| idx[p] + 1 < m) else { break };
            let v = idx[p] + 1;
            for q in p..n {
                for (i, row) in table.iter().enumerate() {
                    hits[i] += row[v] as i64 - row[idx[q]] as i64;
                }
                idx[q] = v;
            }
        }
    }
    Ok(None)
}

/// One row of an approximation-sequence check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproxRow {
    pub n: usize,
    /// Every tuple with Av-error `≤ ε/2` satisfies `χ_n`.
    pub lower: bool,
    /// Every tuple satisfying `χ_n` has Av-error `< ε`.
    pub upper: bool,
    /// `μ^(n)(χ_n)`.
    pub value: Rational,
}

impl ApproxRow {
    pub fn sandwich(&self) -> bool {
        self.lower && self.upper
    }
}

/// `x_1, …, x_n`.
pub fn indexed_vars(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

fn tuple_errors(
    mu: &Measure,
    x: &str,
    sort: Sort,
    phi: &Formula,
    frag: &Fragment,
    n: usize,
) -> Result<Vec<(Vec<usize>, Rational)>> {
    let elems = elements_for(frag, sort);
    let vals: Vec<Value> = elems.iter().map(|(_, v)| v.clone()).collect();
    let insts = parameter_instances(mu, x, phi, &vals, frag)?;
    let table = truth_table(x, &insts, &vals)?;
    let mv = mu_values(mu, x, &insts)?;
    let m = vals.len();
    let total = m.checked_pow(n as u32).filter(|&t| t <= MAX_INSTANCES).ok_or_else(|| {
        crate::Error::Limit(format!("{m}^{n} tuples"))
    })?;
    let nr = Rational::from_int(n as i64);
    let mut out = Vec::with_capacity(total);
    for code in 0..total {
        let tuple: Vec<usize> = (0..n).map(|i| code / m.pow(i as u32) % m).collect();
        let err = table
            .iter()
            .zip(&mv)
            .map(|(row, v)| {
                let h = tuple.iter().filter(|&&k| row[k]).count() as i64;
                (v - Rational::from_int(h) / &nr).abs()
            })
            .max()
            .unwrap_or_else(Rational::zero);
        out.push((tuple, err));
    }
    Ok(out)
}

/// `⋁ (x_1 = a_1 ∧ … ∧ x_n = a_n)` over fragment tuples with Av-error `≤ ε/2`.
pub fn canonical_chi(mu: &Measure, x: &str, sort: Sort, phi: &Formula, eps: &Rational, frag: &Fragment, n: usize) -> Result<Formula> {
    let elems = elements_for(frag, sort);
    let half = eps / Rational::from_int(2);
    let vars = indexed_vars(n);
    let mut parts = Vec::new();
    for (tuple, err) in tuple_errors(mu, x, sort, phi, frag, n)? {
        if err <= half {
            parts.push(Formula::and(
                tuple
                    .iter()
                    .zip(&vars)
                    .map(|(&k, v)| Formula::Atom(Atom::Eq(Term::var(v, sort), Term::param(&elems[k].0, sort))))
                    .collect(),
            ));
        }
    }
    Ok(Formula::or(parts))
}

/// Checks `Av^n_{≤ε/2} ⊆ χ_n ⊆ Av^n_{<ε}` over fragment tuples and reports
/// `μ^(n)(χ_n)`; `chis[k]` is `χ_{k+1}` over `x_1 … x_{k+1}`.
pub fn check_approx_sequence(
    mu: &Measure,
    x: &str,
    sort: Sort,
    phi: &Formula,
    eps: &Rational,
    chis: &[Formula],
    frag: &Fragment,
) -> Result<Vec<ApproxRow>> {
    let half = eps / Rational::from_int(2);
    let elems = elements_for(frag, sort);
    let mut rows = Vec::new();
    for (k, chi) in chis.iter().enumerate() {
        let n = k + 1;
        let vars = indexed_vars(n);
        if let Some(v) = chi.free_vars().keys().find(|v| !vars.contains(v)) {
            return pre(format!("χ_{n} mentions `{v}` outside x1..x{n}"));
        }
        let (mut lower, mut upper) = (true, true);
        for (tuple, err) in tuple_errors(mu, x, sort, phi, frag, n)? {
            let mut env = Env::new();
            for (v, &i) in vars.iter().zip(&tuple) {
                env.insert(v.clone(), elems[i].1.clone());
            }
            let inside = frag.eval(chi, &env)?;
            lower &= !(err <= half) || inside;
            upper &= !inside || err < *eps;
        }
        let value = power_eval(mu, n, &vars, chi, frag)?;
        rows.push(ApproxRow { n, lower, upper, value });
    }
    Ok(rows)
}

/// `max(0, 1 − p(1−p)/(ε²n))`.
pub fn wlln_bound(p: &Rational, eps: &Rational, n: usize) -> Result<Rational> {
    if p.is_negative() || *p > Rational::one() || !eps.is_positive() || n == 0 {
        return pre("need 0 <= p <= 1, eps > 0 and n >= 1");
    }
    let v = Rational::one() - p * (Rational::one() - p) / (eps * eps * Rational::from_int(n as i64));
    Ok(if v.is_negative() { Rational::zero() } else { v })
}

/// `Σ_{k : |k/n − r| < ε} C(n,k) r^k (1−r)^{n−k}`.
pub fn binomial_tail_exact(r: &Rational, eps: &Rational, n: usize) -> Result<Rational> {
    if r.is_negative() || *r > Rational::one() || !eps.is_positive() || n == 0 {
        return pre("need 0 <= r <= 1, eps > 0 and n >= 1");
    }
    let s = Rational::one() - r;
    let nr = Rational::from_int(n as i64);
    let mut binom = BigInt::one();
    let mut acc = Rational::zero();
    for k in 0..=n {
        if k > 0 {
            binom = binom * BigInt::from(n - k + 1) / BigInt::from(k);
        }
        if (Rational::from_int(k as i64) / &nr - r).abs() < *eps {
            acc += Rational::from_integer(binom.clone()) * num::pow(r.clone(), k) * num::pow(s.clone(), n - k);
        }
    }
    Ok(acc)
}

/// `λ^(n) = Σ_X r^{|X|}(1−r)^{n−|X|} λ_{n,X}` for `λ = rμ + (1−r)ν` on a pool
/// of formulas over `x_1 … x_n`.
pub fn fim_convexity_check(
    mu: &Measure,
    nu: &Measure,
    r: &Rational,
    n: usize,
    frag: &Fragment,
    pool: &[Formula],
) -> Result<Report> {
    if r.is_negative() || *r > Rational::one() {
        return pre("r must lie in [0,1]");
    }
    if pool.is_empty() {
        return pre("empty formula pool");
    }
    if n == 0 || n > 16 {
        return pre("n must lie in 1..=16");
    }
    let s = Rational::one() - r;
    let lambda = if r.is_one() {
        mu.clone()
    } else if r.is_zero() {
        nu.clone()
    } else {
        convex_combine(vec![(r.clone(), mu.clone()), (s.clone(), nu.clone())])?
    };
    let vars = indexed_vars(n);
    for f in pool {
        let lhs = power_eval(&lambda, n, &vars, f, frag)?;
        let mut rhs = Rational::zero();
        for mask in 0u32..1 << n {
            let x: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect();
            let w = num::pow(r.clone(), x.len()) * num::pow(s.clone(), n - x.len());
            if w.is_zero() {
                continue;
            }
            rhs += w * pattern_product_eval(&x, n, mu, nu, &vars, f, frag)?;
        }
        if lhs != rhs {
            return Ok(Report::Counterexample { formula: f.clone(), left: lhs, right: rhs });
        }
    }
    Ok(Report::Equal)
}
