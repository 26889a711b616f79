//! Quantifier elimination for `THalfInf` and its P/Q reduct.
//!
//! Quantifiers are removed innermost first. An R quantifier goes by
//! Fourier–Motzkin on each disjunct. For a P or Q quantifier the free symbols
//! are split into complete [`DiagramCase`]s; each case is extended by the
//! bound symbol in every possible way, the P/Q atoms are decided by the
//! extension, and the `ℓ`-values that depend on a bound Q symbol are rewritten
//! through fresh mass variables `m_s` for the part of each minimal element `s`
//! inside it, constrained by `m_s = 0`, `0 < m_s < ℓ(s)` or `m_s = ℓ(s)`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::One;

use crate::error::{pre, Error, Result};
use crate::formula::{to_dnf_capped, Atom, CmpOp, Formula, LinAtom, LinExpr, Literal, Sort, Term, Var};
use crate::linear::{eliminate, Constraint, Rel};
use crate::theories::pq::{DiagramCase, QState};
use crate::theories::TheoryId;
use crate::Rational;

/// Bounds on the case split and the DNF used for R elimination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QeConfig {
    pub max_q_syms: usize,
    pub dnf_cap: usize,
}

impl Default for QeConfig {
    fn default() -> Self {
        QeConfig { max_q_syms: 4, dnf_cap: 4096 }
    }
}

pub fn eliminate_quantifiers(f: &Formula, theory: TheoryId) -> Result<Formula> {
    eliminate_quantifiers_with(f, theory, &QeConfig::default())
}

pub fn eliminate_quantifiers_with(f: &Formula, theory: TheoryId, cfg: &QeConfig) -> Result<Formula> {
    if !theory.is_pq() {
        return pre(format!("quantifier elimination is implemented for thalf-inf and thalf-inf-pq, not {theory}"));
    }
    let out = qe(f, theory, cfg)?;
    debug_assert!(out.is_qf());
    Ok(out)
}

fn qe(f: &Formula, theory: TheoryId, cfg: &QeConfig) -> Result<Formula> {
    Ok(match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Atom(a) => {
            if theory == TheoryId::THalfInfPQ && matches!(a, Atom::Cmp(..)) {
                return pre(format!("`{a}` is not in the P/Q language"));
            }
            f.clone()
        }
        Formula::Not(g) => Formula::not(qe(g, theory, cfg)?),
        Formula::And(gs) => Formula::and(gs.iter().map(|g| qe(g, theory, cfg)).collect::<Result<_>>()?),
        Formula::Or(gs) => Formula::or(gs.iter().map(|g| qe(g, theory, cfg)).collect::<Result<_>>()?),
        Formula::Exists(v, body) => exists(v, &qe(body, theory, cfg)?, cfg)?,
        Formula::Forall(v, body) => Formula::not(exists(v, &Formula::not(qe(body, theory, cfg)?), cfg)?),
    })
}

fn exists(v: &Var, body: &Formula, cfg: &QeConfig) -> Result<Formula> {
    if !body.free_vars().contains_key(&v.name) {
        return Ok(body.clone());
    }
    match v.sort {
        Sort::R => eliminate_r(&v.name, body, cfg.dnf_cap),
        Sort::P | Sort::Q => eliminate_pq(v, body, cfg),
        Sort::Vertex => pre("vertex quantifiers have no elimination here"),
    }
}

/// Atomic P and Q symbols (variables and parameters) of a formula.
pub fn symbols(f: &Formula) -> (Vec<Term>, Vec<Term>) {
    let mut q = BTreeSet::new();
    let mut p = BTreeSet::new();
    for a in f.atoms() {
        for t in a.terms() {
            t.visit(&mut |s| match s {
                Term::Var(_, Sort::Q) | Term::Param(_, Sort::Q) => {
                    q.insert(s.clone());
                }
                Term::Var(_, Sort::P) | Term::Param(_, Sort::P) => {
                    p.insert(s.clone());
                }
                _ => {}
            });
        }
    }
    (q.into_iter().collect(), p.into_iter().collect())
}

fn eliminate_pq(v: &Var, body: &Formula, cfg: &QeConfig) -> Result<Formula> {
    let (qs, ps) = symbols(body);
    let bound = Term::Var(v.name.clone(), v.sort);
    let free_q: Vec<Term> = qs.into_iter().filter(|t| *t != bound).collect();
    let free_p: Vec<Term> = ps.into_iter().filter(|t| *t != bound).collect();
    let total_q = free_q.len() + usize::from(v.sort == Sort::Q);
    if total_q > cfg.max_q_syms {
        return Err(Error::Limit(format!("{total_q} Q symbols in one case split (bound {})", cfg.max_q_syms)));
    }
    let mut results: Vec<(DiagramCase, Formula)> = Vec::new();
    for base in DiagramCase::enumerate(&free_q, &free_p)? {
        let exts = match v.sort {
            Sort::Q => base.extend_q(bound.clone())?,
            _ => base.extend_p(bound.clone())?,
        };
        let mut parts = Vec::new();
        for ext in &exts {
            let g = if v.sort == Sort::P {
                decide_pq(ext, body)?
            } else {
                let (ms, g) = reduce_q_quantifier(&base, ext, &bound, body)?;
                let mut g = g;
                for m in ms {
                    g = eliminate_r(&m, &g, cfg.dnf_cap)?;
                }
                g
            };
            if g == Formula::True {
                parts = vec![Formula::True];
                break;
            }
            parts.push(g);
        }
        results.push((base, Formula::or(parts)));
    }
    if let Some((_, first)) = results.first() {
        if results.iter().all(|(_, g)| g == first) {
            return Ok(first.clone());
        }
    }
    Ok(Formula::or(
        results
            .into_iter()
            .filter(|(_, g)| *g != Formula::False)
            .map(|(b, g)| Formula::and(vec![b.describe(), g]))
            .collect(),
    ))
}

/// `∃x_0 τ_p` for a P symbol: the isolating formula of the case without it.
pub fn eliminate_p(case: &DiagramCase, x: &Term) -> Result<Formula> {
    if case.p_index(x).is_none() {
        return pre(format!("`{x}` is not a point of the case"));
    }
    let keep: Vec<Term> = case.p_syms.iter().filter(|t| *t != x).cloned().collect();
    Ok(case.restrict(&case.q_syms, &keep).describe())
}

/// Replaces the P/Q atoms of `f` by their truth values under `case`.
fn decide_pq(case: &DiagramCase, f: &Formula) -> Result<Formula> {
    let mut err = None;
    let out = f.map_atoms(&mut |a| match a {
        Atom::Cmp(..) => Formula::Atom(a.clone()),
        _ => match case.decide(a) {
            Ok(Some(b)) => if b { Formula::True } else { Formula::False },
            Ok(None) => Formula::Atom(a.clone()),
            Err(e) => {
                err = Some(e);
                Formula::False
            }
        },
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Minimal elements of the subalgebra generated by `generators` under a case,
/// split by `sim` to `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimalElements {
    pub sim: Vec<Term>,
    pub nonsim: Vec<Term>,
}

pub fn minimal_elements(case: &DiagramCase, generators: &[Term], target: Option<&Term>) -> Result<MinimalElements> {
    let mut gens = Vec::new();
    for g in generators {
        match g {
            Term::Top | Term::Bot => {}
            t if case.q_index(t).is_some() => gens.push(t.clone()),
            t => return pre(format!("generator `{t}` is not a symbol of the case")),
        }
    }
    let r = case.restrict(&gens, &[]);
    let mut out = MinimalElements { sim: Vec::new(), nonsim: Vec::new() };
    for (c, cl) in r.classes.iter().enumerate() {
        for j in cl.minterms() {
            let t = r.minterm_term(c, j);
            let close = match target {
                Some(y) => case.decide(&Atom::Sim(t.clone(), y.clone()))? == Some(true),
                None => false,
            };
            if close { out.sim.push(t) } else { out.nonsim.push(t) }
        }
    }
    Ok(out)
}

fn mass_var(s: usize) -> String {
    format!("_m{s}")
}

/// Rewrites `∃y_0 body` under the extension `ext` of `base` into a formula
/// whose only trace of `y_0` is a set of fresh R variables, returned first.
pub fn reduce_q_quantifier(base: &DiagramCase, ext: &DiagramCase, y: &Term, body: &Formula) -> Result<(Vec<String>, Formula)> {
    let idx = ext.q_index(y).ok_or_else(|| Error::Precondition(format!("`{y}` is not in the extension")))?;
    let ell = |t: Term| LinExpr::atom(LinAtom::Ell(t));
    let mut mass: BTreeMap<(usize, usize), LinExpr> = BTreeMap::new();
    for (c, cl) in base.classes.iter().enumerate() {
        for j in cl.minterms() {
            mass.insert((c, j), ell(base.minterm_term(c, j)));
        }
    }
    let mut vars = Vec::new();
    let mut eta = Vec::new();
    let lt = |a: LinExpr, b: LinExpr| Formula::Atom(Atom::Cmp(CmpOp::Lt, a, b));
    if let QState::Class(ci) = ext.q_state[idx] {
        if ci == base.classes.len() {
            let m = mass_var(0);
            let mv = LinExpr::atom(LinAtom::Var(m.clone()));
            mass.insert((ci, 0), mv.clone());
            mass.insert((ci, 1), LinExpr::constant(Rational::one()).sub(&mv));
            eta.push(lt(LinExpr::zero(), mv.clone()));
            eta.push(lt(mv, LinExpr::constant(Rational::one())));
            vars.push(m);
        } else {
            let k = base.classes[ci].gens.len();
            let ne = ext.classes[ci].nonempty;
            for s in base.classes[ci].minterms() {
                let u = mass.remove(&(ci, s)).expect("base cell");
                let (inside, outside) = (ne >> s & 1 == 1, ne >> (s | 1 << k) & 1 == 1);
                match (inside, outside) {
                    (true, true) => {
                        let m = mass_var(s);
                        let mv = LinExpr::atom(LinAtom::Var(m.clone()));
                        mass.insert((ci, s), mv.clone());
                        mass.insert((ci, s | 1 << k), u.sub(&mv));
                        eta.push(lt(LinExpr::zero(), mv.clone()));
                        eta.push(lt(mv, u));
                        vars.push(m);
                    }
                    (true, false) => {
                        mass.insert((ci, s), u);
                    }
                    (false, true) => {
                        mass.insert((ci, s | 1 << k), u);
                    }
                    (false, false) => unreachable!("a nonempty cell stays nonempty"),
                }
            }
        }
    }
    let yname = y.name().unwrap_or_default().to_string();
    let mut ells: BTreeMap<Term, LinExpr> = BTreeMap::new();
    for a in body.atoms() {
        for t in a.terms() {
            if matches!(a, Atom::Cmp(..)) && t.mentions_var(&yname) && !ells.contains_key(t) {
                let e = ext.ell(t)?;
                let v = e.cells.iter().fold(LinExpr::constant(e.constant.clone()), |acc, cell| acc.add(&mass[cell]));
                ells.insert(t.clone(), v);
            }
        }
    }
    let sub = |a: &LinAtom| -> LinExpr {
        match a {
            LinAtom::Ell(t) => ells.get(t).cloned().unwrap_or_else(|| LinExpr::atom(a.clone())),
            a => LinExpr::atom(a.clone()),
        }
    };
    let mut err = None;
    let rewritten = body.map_atoms(&mut |a| match a {
        Atom::Cmp(op, l, r) => Formula::Atom(Atom::Cmp(*op, l.substitute(&sub), r.substitute(&sub))),
        _ => match ext.decide(a) {
            Ok(Some(b)) => if b { Formula::True } else { Formula::False },
            Ok(None) => Formula::Atom(a.clone()),
            Err(e) => {
                err.get_or_insert(e);
                Formula::False
            }
        },
    });
    if let Some(e) = err {
        return Err(e);
    }
    eta.push(rewritten);
    Ok((vars, Formula::and(eta)))
}

type Lin = Constraint<LinAtom, Rational>;

/// The alternatives (one constraint each) expressing a comparison literal.
fn literal_constraints(op: CmpOp, l: &LinExpr, r: &LinExpr, positive: bool) -> Vec<Lin> {
    let d = l.sub(r);
    let neg = d.scale(&-Rational::one());
    let mk = |e: &LinExpr, rel| Constraint::new(e.terms.clone(), e.constant.clone(), rel);
    match (op, positive) {
        (CmpOp::Eq, true) => vec![mk(&d, Rel::Eq)],
        (CmpOp::Lt, true) => vec![mk(&d, Rel::Lt)],
        (CmpOp::Lt, false) => vec![mk(&neg, Rel::Le)],
        (CmpOp::Eq, false) => vec![mk(&d, Rel::Lt), mk(&neg, Rel::Lt)],
    }
}

fn constraint_formula(c: &Lin) -> Formula {
    let e = LinExpr { terms: c.coeffs.clone(), constant: c.constant.clone() };
    match c.rel {
        Rel::Eq => Formula::Atom(Atom::Cmp(CmpOp::Eq, e, LinExpr::zero())),
        Rel::Lt => Formula::Atom(Atom::Cmp(CmpOp::Lt, e, LinExpr::zero())),
        Rel::Le => Formula::not(Formula::Atom(Atom::Cmp(CmpOp::Lt, LinExpr::zero(), e))),
    }
}

/// `∃z f` for an R variable `z`, by Fourier–Motzkin on each DNF disjunct.
pub fn eliminate_r(z: &str, f: &Formula, dnf_cap: usize) -> Result<Formula> {
    let key = LinAtom::Var(z.to_string());
    let dnf = to_dnf_capped(f, dnf_cap)?;
    let mut out = Vec::new();
    for conj in &dnf.disjuncts {
        let (with, without): (Vec<&Literal>, Vec<&Literal>) = conj.iter().partition(|l| match &l.atom {
            Atom::Cmp(_, a, b) => a.terms.contains_key(&key) || b.terms.contains_key(&key),
            _ => false,
        });
        let mut branches: Vec<Vec<Lin>> = vec![Vec::new()];
        for l in with {
            let Atom::Cmp(op, a, b) = &l.atom else { unreachable!("partitioned on comparisons") };
            let alts = literal_constraints(*op, a, b, l.positive);
            branches = branches
                .into_iter()
                .flat_map(|br| {
                    alts.iter().map(move |c| {
                        let mut br = br.clone();
                        br.push(c.clone());
                        br
                    })
                })
                .collect();
        }
        let mut projected = Vec::new();
        for br in &branches {
            if let Some(rest) = eliminate(br, &key) {
                projected.push(Formula::and(rest.iter().map(constraint_formula).collect()));
            }
        }
        let keep = Formula::and(without.iter().map(|l| l.to_formula()).collect());
        out.push(Formula::and(vec![keep, Formula::or(projected)]));
    }
    Ok(Formula::or(out))
}

/// Linear constraints of a conjunction of comparison literals, or `None`
/// when some literal is not a comparison or is a disequality.
pub fn linear_system(conj: &[Literal]) -> Option<Vec<Lin>> {
    let mut out = Vec::new();
    for l in conj {
        let Atom::Cmp(op, a, b) = &l.atom else { return None };
        let mut alts = literal_constraints(*op, a, b, l.positive);
        if alts.len() != 1 {
            return None;
        }
        out.push(alts.pop().expect("one alternative"));
    }
    Some(out)
}
