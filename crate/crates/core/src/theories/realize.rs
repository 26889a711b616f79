//! Standard witnesses for quantifier-free goals and diagram consistency.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::fragment::{Env, Fragment};
use super::intervals::{carve_interval_subset, IntervalUnion};
use super::pq::{DiagramCase, QState};
use super::qelem::QElem;
use super::{TheoryId, Value};
use crate::error::{pre, unsupported, Result};
use crate::formula::{to_dnf, Atom, CmpOp, Formula, LinAtom, LinExpr, Literal, Sort, Term};
use crate::linear::{solve, Constraint, Rel};
use crate::scalar::Exact;
use crate::Rational;

type IU = IntervalUnion<Rational>;

/// Standard values for the free variables of `goal` over `frag`.
///
/// Returns the extended fragment (new vertices, indices and registered
/// coordinates) with the assignment, or `None` when the goal is unsatisfiable.
pub fn realize_in_standard_model(frag: &Fragment, goal: &Formula) -> Result<Option<(Fragment, Env)>> {
    if !goal.is_qf() {
        return pre("realize needs a quantifier-free goal");
    }
    let dnf = to_dnf(goal)?;
    for d in &dnf.disjuncts {
        let found = match frag.theory {
            t if t.is_relational() => relational_disjunct(frag, d)?,
            TheoryId::THalfInf | TheoryId::THalfInfPQ => pq_disjunct(frag, d)?,
            t => return unsupported(format!("standard witnesses for {t}")),
        };
        if let Some((mut f, mut env)) = found {
            for (name, sort) in goal.free_vars() {
                if !env.contains_key(&name) {
                    let v = unconstrained_value(&mut f, sort)?;
                    env.insert(name, v);
                }
            }
            if f.eval(goal, &env)? {
                return Ok(Some((f, env)));
            }
        }
    }
    Ok(None)
}

/// Whether a ground diagram embeds in the standard model; on success the
/// witness is a fragment interpreting every parameter of the diagram.
pub fn check_diagram_consistency(theory: TheoryId, diagram: &[Literal]) -> Result<Option<Fragment>> {
    for l in diagram {
        if !l.atom.vars().is_empty() {
            return pre(format!("literal `{}` is not ground", l.to_formula()));
        }
        let ok = match &l.atom {
            Atom::R(..) => theory == TheoryId::TR,
            Atom::E(..) => theory.is_graph(),
            Atom::Sqin(..) => theory.is_pq() || theory == TheoryId::THalf,
            Atom::Sim(..) => theory.is_pq(),
            Atom::Cmp(..) => theory == TheoryId::THalfInf,
            Atom::Eq(..) => true,
        };
        if !ok {
            return pre(format!("`{}` is not an atom of {theory}", l.atom));
        }
    }
    if theory == TheoryId::THalf {
        return unsupported("consistency checking for thalf diagrams");
    }
    let to_var = |t: &Term| match t {
        Term::Param(n, s) => Term::Var(n.clone(), *s),
        t => t.clone(),
    };
    let lin = |a: &LinAtom| match a {
        LinAtom::Param(n) => LinExpr::atom(LinAtom::Var(n.clone())),
        LinAtom::Ell(t) => LinExpr::atom(LinAtom::Ell(t.map_leaves(&to_var))),
        a => LinExpr::atom(a.clone()),
    };
    let goal = Formula::and(
        diagram.iter().map(|l| Literal { atom: l.atom.map_terms(&|t| t.map_leaves(&to_var), &lin), positive: l.positive }.to_formula()).collect(),
    );
    let Some((mut frag, env)) = realize_in_standard_model(&Fragment::new(theory), &goal)? else {
        return Ok(None);
    };
    for (name, v) in env {
        frag.add_param(&name, v)?;
    }
    Ok(Some(frag))
}

/// A value for a variable the satisfied disjunct does not mention.
fn unconstrained_value(frag: &mut Fragment, sort: Sort) -> Result<Value> {
    Ok(match sort {
        Sort::Vertex => Value::Vertex(frag.new_vertex()),
        Sort::P => Value::Point(frag.new_point(BTreeMap::new())?),
        Sort::Q => Value::Q(QElem::Bot),
        Sort::R => Value::Real(Rational::zero()),
    })
}

fn relational_disjunct(frag: &Fragment, d: &[Literal]) -> Result<Option<(Fragment, Env)>> {
    let mut terms: Vec<Term> = Vec::new();
    for l in d {
        for t in l.atom.terms() {
            match t {
                Term::Var(..) | Term::Param(..) => {
                    if !terms.contains(t) {
                        terms.push(t.clone());
                    }
                }
                t => return pre(format!("`{t}` is not a vertex term")),
            }
        }
    }
    let idx = |t: &Term| terms.iter().position(|s| s == t).expect("collected");
    let mut parent: Vec<usize> = (0..terms.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for l in d.iter().filter(|l| l.positive) {
        if let Atom::Eq(a, b) = &l.atom {
            let (x, y) = (find(&mut parent, idx(a)), find(&mut parent, idx(b)));
            parent[x] = y;
        }
    }
    let mut out = frag.clone();
    let mut class_vertex: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, t) in terms.iter().enumerate() {
        if let Term::Param(n, _) = t {
            let v = frag.vertex_of(n)?;
            let root = find(&mut parent, i);
            match class_vertex.get(&root) {
                Some(&w) if w != v => return Ok(None),
                _ => {
                    class_vertex.insert(root, v);
                }
            }
        }
    }
    let mut vertex = vec![0usize; terms.len()];
    for i in 0..terms.len() {
        let root = find(&mut parent, i);
        let v = *class_vertex.entry(root).or_insert_with(|| out.new_vertex());
        vertex[i] = v;
    }
    let is_param_vertex = |v: usize| frag.name_of_vertex(v).is_some();
    for l in d.iter().filter(|l| l.positive) {
        let vs: Vec<usize> = l.atom.terms().iter().map(|t| vertex[idx(t)]).collect();
        let old = vs.iter().all(|&v| is_param_vertex(v));
        match &l.atom {
            Atom::R(..) => {
                if old && !frag.rel.holds_r(vs[0], vs[1], vs[2]) {
                    return Ok(None);
                }
                out.rel.add_r(vs[0], vs[1], vs[2]);
            }
            Atom::E(..) => {
                if old && !frag.rel.holds_e(vs[0], vs[1]) {
                    return Ok(None);
                }
                if !out.rel.add_e(vs[0], vs[1]) {
                    return Ok(None);
                }
            }
            Atom::Eq(..) => {}
            a => return unsupported(format!("atom `{a}` in theory {}", frag.theory)),
        }
    }
    if let TheoryId::Henson(s) = frag.theory {
        if out.rel.find_clique(s).is_some() {
            return Ok(None);
        }
    }
    let mut env = Env::new();
    for (i, t) in terms.iter().enumerate() {
        if let Term::Var(n, _) = t {
            env.insert(n.clone(), Value::Vertex(vertex[i]));
        }
    }
    for l in d {
        if out.eval_atom(&l.atom, &env)? != l.positive {
            return Ok(None);
        }
    }
    Ok(Some((out, env)))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Unknown {
    Cell(usize, usize),
    Real(String),
}

type Lin = (BTreeMap<Unknown, Rational>, Rational);

fn pq_disjunct(frag: &Fragment, d: &[Literal]) -> Result<Option<(Fragment, Env)>> {
    let mut q_params = Vec::new();
    let mut q_vars = Vec::new();
    let mut p_params = Vec::new();
    let mut p_vars = Vec::new();
    for l in d {
        for t in l.atom.terms() {
            t.visit(&mut |s| {
                let list = match s {
                    Term::Param(_, Sort::Q) => &mut q_params,
                    Term::Var(_, Sort::Q) => &mut q_vars,
                    Term::Param(_, Sort::P) => &mut p_params,
                    Term::Var(_, Sort::P) => &mut p_vars,
                    _ => return,
                };
                if !list.contains(s) {
                    list.push(s.clone());
                }
            });
        }
    }
    let (base, concrete) = DiagramCase::from_values(frag, &Env::new(), &q_params, &p_params)?;
    let mut cases = vec![base.clone()];
    for q in &q_vars {
        cases = cases.iter().map(|c| c.extend_q(q.clone())).collect::<Result<Vec<_>>>()?.concat();
    }
    for p in &p_vars {
        cases = cases.iter().map(|c| c.extend_p(p.clone())).collect::<Result<Vec<_>>>()?.concat();
    }
    'case: for case in &cases {
        let mut cmps = Vec::new();
        for l in d {
            match case.decide(&l.atom)? {
                Some(v) if v != l.positive => continue 'case,
                Some(_) => {}
                None => cmps.push(l),
            }
        }
        let old_classes = base.classes.len();
        let known = |c: usize, j: usize| -> Option<Rational> {
            (c < old_classes && case.classes[c].gens.len() == base.classes[c].gens.len())
                .then(|| concrete.cells[c][j].measure())
        };
        let ell = |t: &Term| -> Result<Lin> {
            let e = case.ell(t)?;
            let mut coeffs = BTreeMap::new();
            let mut constant = e.constant;
            for (c, j) in e.cells {
                match known(c, j) {
                    Some(m) => constant += m,
                    None => *coeffs.entry(Unknown::Cell(c, j)).or_insert_with(Rational::zero) += Rational::one(),
                }
            }
            Ok((coeffs, constant))
        };
        let lin = |e: &LinExpr| -> Result<Lin> {
            let mut coeffs: BTreeMap<Unknown, Rational> = BTreeMap::new();
            let mut constant = e.constant.clone();
            for (a, k) in &e.terms {
                match a {
                    LinAtom::Ell(t) => {
                        let (cs, c0) = ell(t)?;
                        constant += c0 * k;
                        for (u, x) in cs {
                            *coeffs.entry(u).or_insert_with(Rational::zero) += x * k;
                        }
                    }
                    LinAtom::Param(n) => match frag.value(n) {
                        Some(Value::Real(r)) => constant += r * k,
                        _ => return pre(format!("no real value for `{n}`")),
                    },
                    LinAtom::Var(n) => {
                        *coeffs.entry(Unknown::Real(n.clone())).or_insert_with(Rational::zero) += k.clone()
                    }
                }
            }
            Ok((coeffs, constant))
        };
        let mut system = Vec::new();
        for (c, cl) in case.classes.iter().enumerate() {
            if known(c, 0).is_some() {
                continue;
            }
            let k0 = if c < old_classes { base.classes[c].gens.len() } else { 0 };
            let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for j in cl.minterms() {
                groups.entry(j & ((1 << k0) - 1)).or_default().push(j);
                let mut one = BTreeMap::new();
                one.insert(Unknown::Cell(c, j), -Rational::one());
                system.push(Constraint::new(one, Rational::zero(), Rel::Lt));
            }
            for (s, js) in groups {
                let total = if c < old_classes { concrete.cells[c][s].measure() } else { Rational::one() };
                let coeffs = js.iter().map(|&j| (Unknown::Cell(c, j), Rational::one())).collect();
                system.push(Constraint::new(coeffs, -total, Rel::Eq));
            }
        }
        let mut branches: Vec<Vec<Constraint<Unknown, Rational>>> = vec![system];
        for l in cmps {
            let Atom::Cmp(op, a, b) = &l.atom else { unreachable!("only comparisons stay undecided") };
            if frag.theory != TheoryId::THalfInf {
                return unsupported(format!("comparison `{}` in {}", l.atom, frag.theory));
            }
            let (coeffs, constant) = lin(&a.sub(b))?;
            let pos = Constraint::new(coeffs.clone(), constant.clone(), Rel::Lt);
            let neg = Constraint::new(
                coeffs.iter().map(|(u, x)| (u.clone(), -x.clone())).collect(),
                -constant.clone(),
                Rel::Lt,
            );
            let add: Vec<Constraint<Unknown, Rational>> = match (op, l.positive) {
                (CmpOp::Eq, true) => {
                    branches.iter_mut().for_each(|b| b.push(Constraint::new(coeffs.clone(), constant.clone(), Rel::Eq)));
                    continue;
                }
                (CmpOp::Lt, true) => vec![pos],
                (CmpOp::Lt, false) => vec![Constraint { rel: Rel::Le, ..neg }],
                (CmpOp::Eq, false) => vec![pos, neg],
            };
            branches = branches
                .into_iter()
                .flat_map(|b| add.iter().map(move |c| [b.clone(), vec![c.clone()]].concat()))
                .collect();
        }
        for system in &branches {
            let Some(sol) = solve(system) else { continue };
            let mass = |c: usize, j: usize| known(c, j).unwrap_or_else(|| sol.get(&Unknown::Cell(c, j)).cloned().unwrap_or_default());
            if let Some(found) = build_pq(frag, case, &base, &concrete, &mass, &sol)? {
                return Ok(Some(found));
            }
        }
    }
    Ok(None)
}

fn build_pq(
    frag: &Fragment,
    case: &DiagramCase,
    base: &DiagramCase,
    concrete: &super::pq::ConcreteCells,
    mass: &dyn Fn(usize, usize) -> Rational,
    sol: &BTreeMap<Unknown, Rational>,
) -> Result<Option<(Fragment, Env)>> {
    let mut out = frag.clone();
    let old_classes = base.classes.len();
    let n_params = base.p_syms.len();
    let param_point = |i: usize| match frag.eval_term(&case.p_syms[i], &Env::new()) {
        Ok(Value::Point(p)) => Ok(p),
        _ => pre(format!("`{}` is not a point parameter", case.p_syms[i])),
    };
    let mut index = Vec::new();
    let mut sub: Vec<BTreeMap<usize, IU>> = Vec::new();
    for (c, cl) in case.classes.iter().enumerate() {
        let n = if c < old_classes { concrete.index[c] } else { out.fresh_index() };
        index.push(n);
        let k0 = if c < old_classes { base.classes[c].gens.len() } else { 0 };
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for j in cl.minterms() {
            groups.entry(j & ((1 << k0) - 1)).or_default().push(j);
        }
        let mut cells = BTreeMap::new();
        for (s, js) in groups {
            let whole = if c < old_classes { concrete.cells[c][s].clone() } else { IU::full() };
            let mut parts = Vec::new();
            for &j in &js {
                let mut pts = Vec::new();
                for i in (0..n_params).filter(|&i| case.p_rep[i] == i && case.p_cell[i][c] == j) {
                    pts.push(param_point(i)?.coord(n));
                }
                parts.push((mass(c, j), pts));
            }
            for (j, x) in js.into_iter().zip(split_cell(&whole, &parts)?) {
                cells.insert(j, x);
            }
        }
        sub.push(cells);
    }
    let mut env = Env::new();
    for (i, t) in case.q_syms.iter().enumerate() {
        let Term::Var(name, _) = t else { continue };
        let v = match case.q_state[i] {
            QState::Bot => QElem::Bot,
            QState::Top => QElem::Top,
            QState::Class(c) => {
                let Ok(super::pq::CaseVal::Cls(_, m)) = case.eval_term(t) else { unreachable!("proper class member") };
                let x = sub[c].iter().filter(|(j, _)| m >> **j & 1 == 1).fold(IU::empty(), |acc, (_, x)| acc.union(x));
                QElem::pair(index[c], x)
            }
        };
        env.insert(name.clone(), Value::Q(v));
    }
    let mut points: BTreeMap<usize, Value> = BTreeMap::new();
    for i in 0..case.p_syms.len() {
        let r = case.p_rep[i];
        let v = if r < n_params {
            Value::Point(param_point(r)?)
        } else if let Some(v) = points.get(&r) {
            v.clone()
        } else {
            let cells = (0..case.classes.len()).map(|c| (index[c], sub[c][&case.p_cell[r][c]].clone())).collect();
            Value::Point(out.registry.point_in(&cells)?)
        };
        points.insert(i, v.clone());
        if let Term::Var(name, _) = &case.p_syms[i] {
            env.insert(name.clone(), v);
        }
    }
    for (u, v) in sol {
        if let Unknown::Real(n) = u {
            env.insert(n.clone(), Value::Real(v.clone()));
        }
    }
    Ok(Some((out, env)))
}

/// Splits `x` into consecutive parts of the given masses, part `i`
/// containing its listed points.
fn split_cell(x: &IU, parts: &[(Rational, Vec<Rational>)]) -> Result<Vec<IU>> {
    let mut rest = x.clone();
    let mut out = Vec::with_capacity(parts.len());
    for (i, (m, pts)) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            out.push(rest.clone());
            break;
        }
        let later: Vec<&Rational> = parts[i + 1..].iter().flat_map(|p| p.1.iter()).collect();
        let slack = rest.measure() - m;
        let mut delta = slack / Rational::from_int(2 * (later.len() as i64 + 1));
        for q in &later {
            for p in pts {
                if p > *q && p - *q < delta {
                    delta = p - *q;
                }
            }
        }
        let mut guard = IU::empty();
        for q in &later {
            let end = (*q + &delta).min(Rational::one());
            guard = guard.union(&IU::interval((*q).clone(), end)?);
        }
        let y = carve_interval_subset(&rest.difference(&guard), pts, m)?;
        rest = rest.difference(&y);
        out.push(y);
    }
    Ok(out)
}
