//! Morley products, powers, pattern products and the commutation and
//! associativity checkers.
//!
//! `(μ ⊗ ν)(φ(x, y))` integrates the fiber `b ↦ μ(φ(x, b))` against `ν`. The
//! left measure's variables come first, and `μ^(n+1) = μ_{x_{n+1}} ⊗ μ^(n)`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::error::{pre, Error, Result};
use crate::formula::{Atom, Formula, Term};
use crate::measures::{schema_match, GlobalType, Measure, Point};
use crate::theories::{cube_decompose, Fragment, MemberExpr, QElem, Value};
use crate::types::{enumerate_cells, normalize, DEFAULT_TYPE_CAP};
use crate::Rational;

/// Outcome of comparing two evaluations over a formula pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Report {
    Equal,
    Counterexample { formula: Formula, left: Rational, right: Rational },
}

impl Report {
    pub fn is_equal(&self) -> bool {
        matches!(self, Report::Equal)
    }
}

/// Which evaluation path a product took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Linear,
    LeftDefinition,
    RightSupport,
    RightType,
    CubeCells,
    TypeCells,
}

/// `(left ⊗ right)(f)` with `lvars` for the left and `rvars` for the right measure.
pub fn product_eval(
    left: &Measure,
    lvars: &[String],
    right: &Measure,
    rvars: &[String],
    f: &Formula,
    frag: &Fragment,
) -> Result<Rational> {
    product_eval_traced(left, lvars, right, rvars, f, frag).map(|(v, _)| v)
}

pub fn product_eval_traced(
    left: &Measure,
    lvars: &[String],
    right: &Measure,
    rvars: &[String],
    f: &Formula,
    frag: &Fragment,
) -> Result<(Rational, Strategy)> {
    if lvars.len() != left.arity() || rvars.len() != right.arity() {
        return pre("product variables do not match the measure arities");
    }
    let mut all: Vec<String> = lvars.to_vec();
    all.extend(rvars.iter().cloned());
    if let Some(v) = f.free_vars().keys().find(|v| !all.contains(v)) {
        return pre(format!("free variable `{v}` is not a product variable"));
    }
    if let Measure::Convex(parts) = left {
        let mut acc = Rational::zero();
        for (w, m) in parts {
            acc += w * product_eval(m, lvars, right, rvars, f, frag)?;
        }
        return Ok((acc, Strategy::Linear));
    }
    let named = with_names(frag, &left.elements())?;
    if let Some(def) = definition(left, lvars, f, &named)? {
        let mut acc = Rational::zero();
        for (w, g) in def {
            if !w.is_zero() {
                acc += w * right.eval(rvars, &g, &named)?;
            }
        }
        return Ok((acc, Strategy::LeftDefinition));
    }
    if let Some(support) = right.support() {
        let mut acc = Rational::zero();
        for (w, vals) in support {
            let (g, inst) = bind(frag, rvars, &vals, f)?;
            acc += w * left.eval(lvars, &inst, &g)?;
        }
        return Ok((acc, Strategy::RightSupport));
    }
    if let Measure::Dirac(Point::Type(t)) = right {
        let (g, v) = t.realize(frag)?;
        let (g, inst) = bind(&g, rvars, &[v], f)?;
        return Ok((left.eval(lvars, &inst, &g)?, Strategy::RightType));
    }
    if let Measure::CubeLebesgue = right {
        return Ok((cube_cells(left, lvars, &rvars[0], f, frag)?, Strategy::CubeCells));
    }
    if frag.theory.is_relational() {
        if let Some(atoms) = relevance(left, lvars, rvars, f, frag) {
            return Ok((type_cells(left, lvars, right, rvars, f, frag, &atoms)?, Strategy::TypeCells));
        }
    }
    if let Measure::Convex(parts) = right {
        let mut acc = Rational::zero();
        for (w, m) in parts {
            acc += w * product_eval(left, lvars, m, rvars, f, frag)?;
        }
        return Ok((acc, Strategy::Linear));
    }
    Err(Error::NoStrategy(format!("({left}) ⊗ ({right}) over {}", frag.theory)))
}

/// The fragment with a parameter naming every listed element.
pub fn with_names(frag: &Fragment, values: &[Value]) -> Result<Fragment> {
    let mut out = frag.clone();
    for v in values {
        name_for(&mut out, v)?;
    }
    Ok(out)
}

/// The name of a parameter denoting `v`, adding one if needed.
pub fn name_for(frag: &mut Fragment, v: &Value) -> Result<String> {
    if let Some((n, _)) = frag.params().find(|(_, w)| *w == v) {
        return Ok(n.clone());
    }
    let mut k = frag.len();
    while frag.value(&format!("_e{k}")).is_some() {
        k += 1;
    }
    let name = format!("_e{k}");
    frag.add_param(&name, v.clone())?;
    Ok(name)
}

/// Substitutes parameters denoting `vals` for `vars`, naming values as needed.
pub fn bind(frag: &Fragment, vars: &[String], vals: &[Value], f: &Formula) -> Result<(Fragment, Formula)> {
    let mut out = frag.clone();
    let mut map = BTreeMap::new();
    for (x, v) in vars.iter().zip(vals) {
        let name = name_for(&mut out, v)?;
        map.insert(x.clone(), Term::Param(name, v.sort()));
    }
    Ok((out, f.substitute(&map)))
}

/// Weighted formulas `(w_i, ψ_i)` in the remaining variables with
/// `m(f(x, b)) = Σ w_i·[ψ_i(b)]`, for measures defined by such data.
pub fn definition(m: &Measure, vars: &[String], f: &Formula, frag: &Fragment) -> Result<Option<Vec<(Rational, Formula)>>> {
    let one = |g: Formula| Some(vec![(Rational::one(), g)]);
    Ok(match m {
        Measure::Dirac(Point::Element(v)) => match frag.params().find(|(_, w)| *w == v) {
            Some((n, _)) => {
                let mut map = BTreeMap::new();
                map.insert(vars[0].clone(), Term::Param(n.clone(), v.sort()));
                one(f.substitute(&map))
            }
            None => None,
        },
        Measure::Average(vs) => {
            let w = Rational::new(1.into(), (vs.len() as i64).into());
            let mut out = Vec::new();
            for v in vs {
                match definition(&Measure::dirac(v.clone()), vars, f, frag)? {
                    Some(d) => out.extend(d.into_iter().map(|(u, g)| (u * &w, g))),
                    None => return Ok(None),
                }
            }
            Some(out)
        }
        Measure::Dirac(Point::Type(t)) => t.definition(&vars[0], f).and_then(one),
        Measure::Schema(s) => match schema_match(s, &vars[0], f) {
            Some((entry, bind)) => {
                let cells: Vec<(Rational, Formula)> =
                    entry.cells.iter().map(|(g, v)| (v.clone(), g.substitute(&bind))).collect();
                if cells.iter().any(|(_, g)| g.free_vars().contains_key(&vars[0])) {
                    None
                } else {
                    Some(cells)
                }
            }
            None => None,
        },
        Measure::Convex(parts) => {
            let mut out = Vec::new();
            for (w, p) in parts {
                match definition(p, vars, f, frag)? {
                    Some(d) => out.extend(d.into_iter().map(|(u, g)| (u * w, g))),
                    None => return Ok(None),
                }
            }
            Some(out)
        }
        Measure::Product(a, b) => {
            let (av, bv) = vars.split_at(a.arity());
            let Some(da) = definition(a, av, f, frag)? else { return Ok(None) };
            let mut out = Vec::new();
            for (w, g) in da {
                match definition(b, bv, &g, frag)? {
                    Some(db) => out.extend(db.into_iter().map(|(u, h)| (u * &w, h))),
                    None => return Ok(None),
                }
            }
            Some(out)
        }
        _ => None,
    })
}

/// Right measure Lebesgue on points: the fiber is constant on the cubes cut
/// out by the fragment's measured sets, so evaluate it at a fresh point of
/// each cube.
fn cube_cells(left: &Measure, lvars: &[String], y: &str, f: &Formula, frag: &Fragment) -> Result<Rational> {
    if !frag.theory.is_pq() {
        return pre(format!("cube measure over {}", frag.theory));
    }
    let terms: Vec<(MemberExpr, Rational)> = frag
        .params()
        .filter_map(|(_, v)| match v {
            Value::Q(QElem::Pair(n, x)) => Some((MemberExpr::member(*n, x.clone()), Rational::one())),
            _ => None,
        })
        .collect();
    let mut acc = Rational::zero();
    for (cube, _) in cube_decompose(&terms) {
        let w = cube.measure();
        if w.is_zero() {
            continue;
        }
        let mut g = frag.clone();
        let p = g.registry.point_in(&cube.constraints)?;
        let (g, inst) = bind(&g, &[y.to_string()], &[Value::Point(p)], f)?;
        acc += w * left.eval(lvars, &inst, &g)?;
    }
    Ok(acc)
}

/// Instances each left variable can take in a defining formula: parameter
/// names, or `None` for "stays a variable".
fn candidates(
    m: &Measure,
    vars: &[String],
    frag: &Fragment,
    cands: &mut BTreeMap<String, BTreeSet<Option<String>>>,
    extra: &mut Vec<(String, Formula)>,
) -> bool {
    let name = |v: &Value| frag.params().find(|(_, w)| *w == v).map(|(n, _)| n.clone());
    match m {
        Measure::Dirac(Point::Element(v)) => match name(v) {
            Some(n) => {
                cands.entry(vars[0].clone()).or_default().insert(Some(n));
                true
            }
            None => false,
        },
        Measure::Average(vs) => {
            for v in vs {
                match name(v) {
                    Some(n) => {
                        cands.entry(vars[0].clone()).or_default().insert(Some(n));
                    }
                    None => return false,
                }
            }
            true
        }
        Measure::CoinFlip { .. } | Measure::Dirac(Point::Type(GlobalType::NonAdjacent)) => {
            cands.entry(vars[0].clone()).or_default().insert(None);
            true
        }
        Measure::Dirac(Point::Type(GlobalType::TernaryP { witnesses })) => {
            let e = cands.entry(vars[0].clone()).or_default();
            e.insert(None);
            e.extend(witnesses.iter().map(|w| Some(w.clone())));
            true
        }
        Measure::Dirac(Point::Type(GlobalType::TernaryQ { var, pairs })) => {
            cands.entry(vars[0].clone()).or_default().insert(None);
            extra.extend(pairs.iter().map(|(_, tau)| (var.clone(), tau.clone())));
            true
        }
        Measure::Convex(parts) => parts.iter().all(|(_, p)| candidates(p, vars, frag, cands, extra)),
        Measure::Product(a, b) => {
            let (av, bv) = vars.split_at(a.arity());
            candidates(a, av, frag, cands, extra) && candidates(b, bv, frag, cands, extra)
        }
        _ => false,
    }
}

/// Atoms over the right variables that the left fiber can depend on, or
/// `None` when the left measure is not built from points and generic types.
pub fn relevance(left: &Measure, lvars: &[String], rvars: &[String], f: &Formula, frag: &Fragment) -> Option<Vec<Atom>> {
    let mut cands = BTreeMap::new();
    let mut extra = Vec::new();
    if !candidates(left, lvars, frag, &mut cands, &mut extra) {
        return None;
    }
    let mut out = BTreeSet::new();
    for a in f.atoms() {
        let present: Vec<&String> = lvars.iter().filter(|v| a.vars().contains(*v)).collect();
        let mut choices: Vec<BTreeMap<String, Term>> = vec![BTreeMap::new()];
        for v in &present {
            let mut next = Vec::new();
            for c in &choices {
                for opt in cands.get(*v).into_iter().flatten() {
                    let mut c2 = c.clone();
                    if let Some(n) = opt {
                        c2.insert((*v).clone(), Term::param(n, crate::formula::Sort::Vertex));
                    }
                    next.push(c2);
                }
            }
            choices = next;
        }
        for c in choices {
            if let Formula::Atom(b) = Formula::Atom(a.clone()).substitute(&c) {
                let vs = b.vars();
                if lvars.iter().all(|v| !vs.contains(v)) && rvars.iter().any(|v| vs.contains(v)) {
                    out.insert(normalize(&b));
                }
            }
        }
    }
    for (var, tau) in extra {
        for r in rvars {
            let mut m = BTreeMap::new();
            m.insert(var.clone(), Term::var(r, crate::formula::Sort::Vertex));
            out.extend(tau.substitute(&m).atoms().into_iter().map(|a| normalize(&a)));
        }
    }
    Some(out.into_iter().collect())
}

fn type_cells(
    left: &Measure,
    lvars: &[String],
    right: &Measure,
    rvars: &[String],
    f: &Formula,
    frag: &Fragment,
    atoms: &[Atom],
) -> Result<Rational> {
    let mut acc = Rational::zero();
    for cell in enumerate_cells(frag, rvars, atoms, DEFAULT_TYPE_CAP)? {
        let mass = right.eval(rvars, &cell.to_formula(frag), frag)?;
        if mass.is_zero() {
            continue;
        }
        let Some((g, env)) = cell.realize(frag)? else {
            return Err(Error::Inconsistent(format!("cell `{}` has mass but no realization", cell.to_formula(frag))));
        };
        let vals: Vec<Value> = rvars.iter().map(|v| env[v].clone()).collect();
        let (g, inst) = bind(&g, rvars, &vals, f)?;
        acc += mass * left.eval(lvars, &inst, &g)?;
    }
    Ok(acc)
}

/// `μ^(n)` as a nested product; evaluate it with [`power_vars`].
pub fn power(m: &Measure, n: usize) -> Result<Measure> {
    pattern_product(&(1..=n).collect::<Vec<_>>(), n, m, m)
}

/// Variable order of a nested n-fold product over `x_1 … x_n`.
pub fn power_vars(vars: &[String]) -> Vec<String> {
    vars.iter().rev().cloned().collect()
}

/// `μ^(n)(f)` where `vars` lists `x_1 … x_n`.
pub fn power_eval(m: &Measure, n: usize, vars: &[String], f: &Formula, frag: &Fragment) -> Result<Rational> {
    if vars.len() != n {
        return pre(format!("power of order {n} given {} variables", vars.len()));
    }
    power(m, n)?.eval(&power_vars(vars), f, frag)
}

/// `λ_{n,X} = ⊗_i (μ if i ∈ X else ν)` with indices `1..=n`, nested like a power.
pub fn pattern_product(x: &[usize], n: usize, mu: &Measure, nu: &Measure) -> Result<Measure> {
    if n == 0 {
        return pre("products need n >= 1");
    }
    if let Some(i) = x.iter().find(|&&i| i == 0 || i > n) {
        return pre(format!("index {i} outside 1..={n}"));
    }
    let pick = |i: usize| if x.contains(&i) { mu.clone() } else { nu.clone() };
    let mut acc = pick(1);
    for i in 2..=n {
        acc = Measure::product(pick(i), acc);
    }
    Ok(acc)
}

pub fn pattern_product_eval(
    x: &[usize],
    n: usize,
    mu: &Measure,
    nu: &Measure,
    vars: &[String],
    f: &Formula,
    frag: &Fragment,
) -> Result<Rational> {
    if vars.len() != n {
        return pre(format!("pattern product of order {n} given {} variables", vars.len()));
    }
    pattern_product(x, n, mu, nu)?.eval(&power_vars(vars), f, frag)
}

fn compare(
    pool: &[Formula],
    mut lhs: impl FnMut(&Formula) -> Result<Rational>,
    mut rhs: impl FnMut(&Formula) -> Result<Rational>,
) -> Result<Report> {
    if pool.is_empty() {
        return pre("empty formula pool");
    }
    for f in pool {
        let (l, r) = (lhs(f)?, rhs(f)?);
        if l != r {
            return Ok(Report::Counterexample { formula: f.clone(), left: l, right: r });
        }
    }
    Ok(Report::Equal)
}

/// Compares `(μ_x ⊗ ν_y)` with `(ν_y ⊗ μ_x)` on formulas in `x, y`.
pub fn check_commute(mu: &Measure, nu: &Measure, x: &str, y: &str, frag: &Fragment, pool: &[Formula]) -> Result<Report> {
    let (xs, ys) = ([x.to_string()], [y.to_string()]);
    compare(
        pool,
        |f| product_eval(mu, &xs, nu, &ys, f, frag),
        |f| product_eval(nu, &ys, mu, &xs, f, frag),
    )
}

/// Compares `((μ ⊗ ν) ⊗ λ)` with `(μ ⊗ (ν ⊗ λ))` on formulas in `vars = [x, y, z]`.
pub fn check_assoc(
    mu: &Measure,
    nu: &Measure,
    lambda: &Measure,
    vars: &[String; 3],
    frag: &Fragment,
    pool: &[Formula],
) -> Result<Report> {
    let left = Measure::product(Measure::product(mu.clone(), nu.clone()), lambda.clone());
    let right = Measure::product(mu.clone(), Measure::product(nu.clone(), lambda.clone()));
    compare(pool, |f| left.eval(vars, f, frag), |f| right.eval(vars, f, frag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::convex_combine;
    use crate::scalar::frac;

    fn frag(text: &str) -> Fragment {
        Fragment::from_text(text).unwrap()
    }

    fn vars(s: &[&str]) -> Vec<String> {
        s.iter().map(|v| v.to_string()).collect()
    }

    fn dirac(f: &Fragment, n: &str) -> Measure {
        Measure::dirac(f.value(n).unwrap().clone())
    }

    #[test]
    fn dirac_products() {
        let f = frag("theory tr\nparam a, b\nfact R(a,b,a)\n");
        let m = Measure::product(dirac(&f, "a"), dirac(&f, "b"));
        let xy = vars(&["x", "y"]);
        assert!(m.eval(&xy, &f.parse_formula("R(x,y,x)").unwrap(), &f).unwrap().is_one());
        assert!(m.eval(&xy, &f.parse_formula("R(y,x,y)").unwrap(), &f).unwrap().is_zero());
    }

    #[test]
    fn averages_against_coin_flip() {
        let f = frag("theory tr\nparam a, b\n");
        let av = Measure::Average(vec![f.value("a").unwrap().clone(), f.value("b").unwrap().clone()]);
        let xy = vars(&["x", "y"]);
        let phi = f.parse_formula("R(x,y,a)").unwrap();
        let (v, s) = product_eval_traced(&av, &xy[..1], &Measure::coin_flip(), &xy[1..], &phi, &f).unwrap();
        assert_eq!((v, s), (frac(1, 2), Strategy::LeftDefinition));
        let (v, s) = product_eval_traced(&Measure::coin_flip(), &xy[..1], &av, &xy[1..], &phi, &f).unwrap();
        assert_eq!((v, s), (frac(1, 2), Strategy::RightSupport));
    }

    #[test]
    fn coin_flip_squared() {
        let f = frag("theory tr\nparam c\n");
        let xy = vars(&["x", "y"]);
        let cf = Measure::coin_flip();
        let phi = f.parse_formula("R(x,y,c)").unwrap();
        let (v, s) = product_eval_traced(&cf, &xy[..1], &cf, &xy[1..], &phi, &f).unwrap();
        assert_eq!((v, s), (frac(1, 2), Strategy::TypeCells));
        let x12 = vars(&["x1", "x2"]);
        let psi = f.parse_formula("R(x2,x1,c)").unwrap();
        assert_eq!(power_eval(&cf, 2, &x12, &psi, &f).unwrap(), frac(1, 2));
        let eq = f.parse_formula("x1 = x2").unwrap();
        assert_eq!(power_eval(&cf, 2, &x12, &eq, &f).unwrap(), frac(0, 1));
    }

    #[test]
    fn powers_and_patterns() {
        let f = frag("theory tr\nparam a, b\n");
        let (da, db) = (dirac(&f, "a"), dirac(&f, "b"));
        let x12 = vars(&["x1", "x2"]);
        let both = f.parse_formula("x1 = a & x2 = b").unwrap();
        assert!(pattern_product_eval(&[1], 2, &da, &db, &x12, &both, &f).unwrap().is_one());
        let same = f.parse_formula("x1 = x2").unwrap();
        assert!(power_eval(&da, 2, &x12, &same, &f).unwrap().is_one());
        let r = frac(1, 2);
        let lam = convex_combine(vec![(r.clone(), da.clone()), (r, db.clone())]).unwrap();
        let aa = f.parse_formula("x1 = a & x2 = a").unwrap();
        assert_eq!(power_eval(&lam, 2, &x12, &aa, &f).unwrap(), frac(1, 4));
    }

    #[test]
    fn commutation_reports() {
        let f = frag("theory tr\nparam a, b\n");
        let pool = vec![f.parse_formula("R(x,y,a) | x = y").unwrap()];
        assert!(check_commute(&dirac(&f, "a"), &dirac(&f, "b"), "x", "y", &f, &pool).unwrap().is_equal());
        let g = frag("theory henson 3\nparam m, n\nfact E(m,n)\n");
        let pe = Measure::Dirac(Point::Type(GlobalType::NonAdjacent));
        let av = Measure::Average(vec![g.value("m").unwrap().clone(), g.value("n").unwrap().clone()]);
        let pool = vec![g.parse_formula("E(x,y)").unwrap(), g.parse_formula("E(x,m) | E(y,n)").unwrap()];
        assert!(check_commute(&pe, &av, "x", "y", &g, &pool).unwrap().is_equal());
    }

    #[test]
    fn nocom_pair() {
        let f = frag("theory thalf-inf\n");
        let mu = Measure::CubeLebesgue;
        let q = Measure::Dirac(Point::Type(GlobalType::Covering));
        let phi = f.parse_formula("x sqin y").unwrap();
        let (x, y) = (vars(&["x"]), vars(&["y"]));
        assert_eq!(product_eval(&mu, &x, &q, &y, &phi, &f).unwrap(), frac(1, 2));
        assert!(product_eval(&q, &y, &mu, &x, &phi, &f).unwrap().is_one());
        match check_commute(&mu, &q, "x", "y", &f, &[phi]).unwrap() {
            Report::Counterexample { left, right, .. } => assert_eq!((left, right), (frac(1, 2), frac(1, 1))),
            Report::Equal => panic!("expected a counterexample"),
        }
    }

    #[test]
    fn associativity_of_definable_triple() {
        let f = frag("theory tr\nparam a\n");
        let cf = Measure::coin_flip();
        let da = dirac(&f, "a");
        let pool = vec![
            f.parse_formula("R(x,y,z)").unwrap(),
            f.parse_formula("R(z,x,a) & !R(y,y,z)").unwrap(),
        ];
        let v = vars(&["x", "y", "z"]);
        let r = check_assoc(&cf, &da, &cf, &[v[0].clone(), v[1].clone(), v[2].clone()], &f, &pool).unwrap();
        assert!(r.is_equal(), "{r:?}");
    }
}
