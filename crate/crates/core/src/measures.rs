//! Keisler measures over fragments and their exact evaluation.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{pre, unsupported, Error, Result};
use crate::formula::{Atom, Formula, Sort, Term};
use crate::morley;
use crate::scalar::{fmt_rat, in_unit, parse_rat};
use crate::theories::cube::set_measure;
use crate::theories::halfset::{cover_points_avoiding, HalfSet};
use crate::theories::{
    carve_interval_subset, realize_in_standard_model, Env, Fragment, IntervalUnion, MemberExpr, QElem, TheoryId,
    Value,
};
use crate::Rational;

/// A global one-variable type given by a rule over any fragment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GlobalType {
    /// `R(x,b,c)` holds iff `R(a,b,c)` for some witness `a`.
    TernaryP { witnesses: Vec<String> },
    /// `R(a,y,c)` holds iff `a` is some `a_i` and `c` satisfies `τ_i(var)`.
    TernaryQ { var: String, pairs: Vec<(String, Formula)> },
    /// A new vertex adjacent to nothing.
    NonAdjacent,
    /// A new measured set containing every point, of measure 1/2 in a new
    /// copy (or a new half set in the finite theory).
    Covering,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Point {
    Element(Value),
    Type(GlobalType),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndependentFamilySpec {
    /// Variable the member formulas are written in.
    pub var: String,
    pub family: Vec<Formula>,
    pub f: Vec<Rational>,
}

/// One schema entry: values of `pattern(x; params)` by partition cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaEntry {
    pub pattern: Formula,
    pub params: Vec<String>,
    pub cells: Vec<(Formula, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub var: String,
    pub entries: Vec<SchemaEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Measure {
    Dirac(Point),
    Average(Vec<Value>),
    CoinFlip { bias: Rational },
    IndependentFamily(IndependentFamilySpec),
    /// Product Lebesgue measure on the points of `THalfInf`.
    CubeLebesgue,
    Schema(Schema),
    Convex(Vec<(Rational, Measure)>),
    /// `left ⊗ right`; the left measure's variables come first.
    Product(Box<Measure>, Box<Measure>),
}

impl Measure {
    pub fn dirac(v: Value) -> Measure {
        Measure::Dirac(Point::Element(v))
    }

    pub fn coin_flip() -> Measure {
        Measure::CoinFlip { bias: Rational::new(1.into(), 2.into()) }
    }

    pub fn product(left: Measure, right: Measure) -> Measure {
        Measure::Product(Box::new(left), Box::new(right))
    }

    pub fn arity(&self) -> usize {
        match self {
            Measure::Product(l, r) => l.arity() + r.arity(),
            Measure::Convex(parts) => parts.first().map_or(1, |(_, m)| m.arity()),
            _ => 1,
        }
    }

    /// The measure of the set defined by `f`, whose free variables are
    /// among `vars` (one per coordinate of the measure).
    pub fn eval(&self, vars: &[String], f: &Formula, frag: &Fragment) -> Result<Rational> {
        if vars.len() != self.arity() {
            return pre(format!("measure of arity {} given {} variables", self.arity(), vars.len()));
        }
        if !f.is_qf() {
            return pre("measures evaluate quantifier-free formulas");
        }
        if let Some(v) = f.free_vars().keys().find(|v| !vars.contains(v)) {
            return pre(format!("free variable `{v}` is not a measure variable"));
        }
        match self {
            Measure::Product(l, r) => {
                let (lv, rv) = vars.split_at(l.arity());
                morley::product_eval(l, lv, r, rv, f, frag)
            }
            Measure::Convex(parts) => {
                let mut acc = Rational::zero();
                for (w, m) in parts {
                    if !w.is_zero() {
                        acc += w * m.eval(vars, f, frag)?;
                    }
                }
                Ok(acc)
            }
            _ => self.eval_unary(&vars[0], f, frag),
        }
    }

    fn eval_unary(&self, x: &str, f: &Formula, frag: &Fragment) -> Result<Rational> {
        match self {
            Measure::Dirac(Point::Element(v)) => indicator(frag, x, v, f),
            Measure::Dirac(Point::Type(t)) => {
                let (g, v) = t.realize(frag)?;
                indicator(&g, x, &v, f)
            }
            Measure::Average(vs) => {
                if vs.is_empty() {
                    return pre("average of no elements");
                }
                let mut acc = Rational::zero();
                for v in vs {
                    acc += indicator(frag, x, v, f)?;
                }
                Ok(acc / Rational::from_integer((vs.len() as i64).into()))
            }
            Measure::CoinFlip { bias } => coin_flip_eval(frag, x, f, bias),
            Measure::IndependentFamily(spec) => independent_eval(spec, x, f, frag),
            Measure::CubeLebesgue => cube_eval(frag, x, f),
            Measure::Schema(s) => extend_definable_schema(s, x, f, frag),
            Measure::Convex(_) | Measure::Product(..) => unreachable!("handled in eval"),
        }
    }

    /// Finite support as weighted tuples, when there is one.
    pub fn support(&self) -> Option<Vec<(Rational, Vec<Value>)>> {
        match self {
            Measure::Dirac(Point::Element(v)) => Some(vec![(Rational::one(), vec![v.clone()])]),
            Measure::Average(vs) if !vs.is_empty() => {
                let w = Rational::new(1.into(), (vs.len() as i64).into());
                Some(vs.iter().map(|v| (w.clone(), vec![v.clone()])).collect())
            }
            Measure::Convex(parts) => {
                let mut out = Vec::new();
                for (w, m) in parts {
                    for (v, t) in m.support()? {
                        out.push((w * v, t));
                    }
                }
                Some(out)
            }
            Measure::Product(l, r) => {
                let (ls, rs) = (l.support()?, r.support()?);
                let mut out = Vec::new();
                for (a, s) in &ls {
                    for (b, t) in &rs {
                        let mut tuple = s.clone();
                        tuple.extend(t.iter().cloned());
                        out.push((a * b, tuple));
                    }
                }
                Some(out)
            }
            _ => None,
        }
    }

    /// Element values the measure mentions (support points, recursively).
    pub fn elements(&self) -> Vec<Value> {
        match self {
            Measure::Dirac(Point::Element(v)) => vec![v.clone()],
            Measure::Average(vs) => vs.clone(),
            Measure::Convex(parts) => parts.iter().flat_map(|(_, m)| m.elements()).collect(),
            Measure::Product(l, r) => {
                let mut out = l.elements();
                out.extend(r.elements());
                out
            }
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::Dirac(Point::Element(v)) => write!(f, "dirac({v})"),
            Measure::Dirac(Point::Type(t)) => write!(f, "type({t:?})"),
            Measure::Average(vs) => {
                let parts: Vec<String> = vs.iter().map(Value::to_string).collect();
                write!(f, "av({})", parts.join(", "))
            }
            Measure::CoinFlip { bias } => write!(f, "coinflip({})", fmt_rat(bias)),
            Measure::IndependentFamily(s) => write!(f, "indep({} members)", s.family.len()),
            Measure::CubeLebesgue => f.write_str("cube"),
            Measure::Schema(s) => write!(f, "schema({} entries)", s.entries.len()),
            Measure::Convex(parts) => {
                let parts: Vec<String> = parts.iter().map(|(w, m)| format!("{}*{m}", fmt_rat(w))).collect();
                write!(f, "convex({})", parts.join(" + "))
            }
            Measure::Product(l, r) => write!(f, "({l} ⊗ {r})"),
        }
    }
}

fn indicator(frag: &Fragment, x: &str, v: &Value, f: &Formula) -> Result<Rational> {
    let mut env = Env::new();
    env.insert(x.to_string(), v.clone());
    Ok(if frag.eval(f, &env)? { Rational::one() } else { Rational::zero() })
}

/// `r·μ + (1−r)·ν` generalised to any weights summing to 1.
pub fn convex_combine(parts: Vec<(Rational, Measure)>) -> Result<Measure> {
    if parts.is_empty() {
        return pre("convex combination of no measures");
    }
    let total = parts.iter().fold(Rational::zero(), |a, (w, _)| a + w);
    if !total.is_one() || parts.iter().any(|(w, _)| *w < Rational::zero()) {
        return pre(format!("convex weights sum to {} or are negative", fmt_rat(&total)));
    }
    let arity = parts[0].1.arity();
    if parts.iter().any(|(_, m)| m.arity() != arity) {
        return pre("convex components have different arities");
    }
    Ok(Measure::Convex(parts))
}

fn is_x(t: &Term, x: &str) -> bool {
    matches!(t, Term::Var(n, _) if n == x)
}

/// Shannon expansion of `f` over its remaining atoms, each an independent
/// event of probability `p`.
fn shannon(f: &Formula, p: &Rational) -> Rational {
    match f {
        Formula::True => return Rational::one(),
        Formula::False => return Rational::zero(),
        _ => {}
    }
    let atom = first_atom(f).expect("non-constant formula has an atom");
    let yes = f.partial_eval(&mut |a| (*a == atom).then_some(true));
    let no = f.partial_eval(&mut |a| (*a == atom).then_some(false));
    p * shannon(&yes, p) + (Rational::one() - p) * shannon(&no, p)
}

fn first_atom(f: &Formula) -> Option<Atom> {
    match f {
        Formula::Atom(a) => Some(a.clone()),
        Formula::Not(g) => first_atom(g),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().find_map(first_atom),
        _ => None,
    }
}

/// Coin-flip measure: each relation instance in `x` is an independent event
/// of probability `bias`; equalities of `x` with anything else are null.
pub fn coin_flip_eval(frag: &Fragment, x: &str, f: &Formula, bias: &Rational) -> Result<Rational> {
    match frag.theory {
        TheoryId::TR | TheoryId::RandomGraph => {}
        t => return unsupported(format!("coin-flip measure on {t}")),
    }
    if !in_unit(bias) {
        return pre(format!("bias {} outside [0,1]", fmt_rat(bias)));
    }
    let mut err = None;
    let g = f.map_atoms(&mut |a| {
        let mentions = a.terms().iter().any(|t| is_x(t, x));
        let decided = match a {
            Atom::Eq(s, t) if s == t => Some(true),
            Atom::Eq(..) if mentions => Some(false),
            Atom::E(s, t) if s == t => Some(false),
            Atom::R(..) | Atom::E(..) if mentions => None,
            _ => match frag.eval_atom(a, &Env::new()) {
                Ok(b) => Some(b),
                Err(e) => {
                    err = Some(e);
                    Some(false)
                }
            },
        };
        match decided {
            Some(true) => Formula::True,
            Some(false) => Formula::False,
            None => Formula::Atom(crate::types::normalize(a)),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(shannon(&g, bias))
}

fn cube_eval(frag: &Fragment, x: &str, f: &Formula) -> Result<Rational> {
    if !frag.theory.is_pq() {
        return unsupported(format!("cube measure on {}", frag.theory));
    }
    Ok(set_measure(&member_expr(frag, x, f)?))
}

/// The set of points `a` with `f(a)` as a coordinate-membership expression.
pub fn member_expr(frag: &Fragment, x: &str, f: &Formula) -> Result<MemberExpr> {
    let atom_expr = |a: &Atom| -> Result<MemberExpr> {
        let mentions = a.vars().contains(x);
        if !mentions {
            return Ok(if frag.eval_atom(a, &Env::new())? { MemberExpr::True } else { MemberExpr::False });
        }
        match a {
            Atom::Sqin(s, t) if is_x(s, x) && !t.mentions_var(x) => match frag.eval_term(t, &Env::new())? {
                Value::Q(QElem::Bot) => Ok(MemberExpr::False),
                Value::Q(QElem::Top) => Ok(MemberExpr::True),
                Value::Q(QElem::Pair(n, set)) => Ok(MemberExpr::member(n, set)),
                v => pre(format!("{v} is not a Q element")),
            },
            Atom::Eq(s, t) if s == t => Ok(MemberExpr::True),
            Atom::Eq(..) => Ok(MemberExpr::False),
            a => pre(format!("atom `{a}` is not a membership condition on `{x}`")),
        }
    };
    fn walk(f: &Formula, g: &impl Fn(&Atom) -> Result<MemberExpr>) -> Result<MemberExpr> {
        Ok(match f {
            Formula::True => MemberExpr::True,
            Formula::False => MemberExpr::False,
            Formula::Atom(a) => g(a)?,
            Formula::Not(h) => MemberExpr::not(walk(h, g)?),
            Formula::And(hs) => MemberExpr::and(hs.iter().map(|h| walk(h, g)).collect::<Result<_>>()?),
            Formula::Or(hs) => MemberExpr::or(hs.iter().map(|h| walk(h, g)).collect::<Result<_>>()?),
            _ => return pre("quantified formula"),
        })
    }
    walk(f, &atom_expr)
}

fn rename(f: &Formula, from: &str, to: &str) -> Formula {
    if from == to {
        return f.clone();
    }
    let sort = f.free_vars().get(from).copied().unwrap_or(Sort::Vertex);
    let mut map = BTreeMap::new();
    map.insert(from.to_string(), Term::Var(to.to_string(), sort));
    f.substitute(&map)
}

/// Sign-pattern cell `⋀_{i∈X} A_i ∧ ⋀_{i∉X} ¬A_i` for the bitmask `X`.
fn family_cell(members: &[Formula], mask: u64) -> Formula {
    Formula::and(
        members
            .iter()
            .enumerate()
            .map(|(i, a)| if mask >> i & 1 == 1 { a.clone() } else { Formula::not(a.clone()) })
            .collect(),
    )
}

/// A disjoint pair `(X, Y)` of member indices with `⋀X ∧ ⋀¬Y` inconsistent.
pub fn find_dependence(family: &[Formula], frag: &Fragment) -> Result<Option<(Vec<usize>, Vec<usize>)>> {
    if family.len() > 16 {
        return Err(Error::Limit(format!("{} family members exceed the bound 16", family.len())));
    }
    for mask in 0..1u64 << family.len() {
        if realize_in_standard_model(frag, &family_cell(family, mask))?.is_none() {
            let x = (0..family.len()).filter(|i| mask >> i & 1 == 1).collect();
            let y = (0..family.len()).filter(|i| mask >> i & 1 == 0).collect();
            return Ok(Some((x, y)));
        }
    }
    Ok(None)
}

/// True iff every sign pattern of the family is consistent over the fragment.
pub fn check_independence(family: &[Formula], frag: &Fragment) -> Result<bool> {
    Ok(find_dependence(family, frag)?.is_none())
}

pub fn independent_family_measure(spec: IndependentFamilySpec, frag: &Fragment) -> Result<Measure> {
    if spec.family.len() != spec.f.len() {
        return pre("family and value lists differ in length");
    }
    if let Some(v) = spec.f.iter().find(|v| !in_unit(v)) {
        return pre(format!("family value {} outside [0,1]", fmt_rat(v)));
    }
    for (i, a) in spec.family.iter().enumerate() {
        if spec.family[..i].contains(a) {
            return pre(format!("repeated family member `{a}`"));
        }
        if a.free_vars().keys().any(|v| *v != spec.var) {
            return pre(format!("family member `{a}` has variables other than `{}`", spec.var));
        }
    }
    if let Some((x, y)) = find_dependence(&spec.family, frag)? {
        return Err(Error::Dependent(format!("X = {x:?}, Y = {y:?}")));
    }
    Ok(Measure::IndependentFamily(spec))
}

/// `∏_{A∈X} f(A) · ∏_{B∈Y} (1 − f(B))`, the value of `⋀X ∧ ⋀¬Y`.
pub fn normal_form_value(spec: &IndependentFamilySpec, x: &[usize], y: &[usize]) -> Rational {
    if x.iter().any(|i| y.contains(i)) {
        return Rational::zero();
    }
    let mut acc = Rational::one();
    for &i in x {
        acc *= &spec.f[i];
    }
    for &j in y {
        acc *= Rational::one() - &spec.f[j];
    }
    acc
}

fn independent_eval(spec: &IndependentFamilySpec, x: &str, f: &Formula, frag: &Fragment) -> Result<Rational> {
    let members: Vec<Formula> = spec.family.iter().map(|a| rename(a, &spec.var, x)).collect();
    let k = members.len();
    let mut acc = Rational::zero();
    let member_atoms: Option<Vec<&Atom>> = members
        .iter()
        .map(|m| match m {
            Formula::Atom(a) => Some(a),
            _ => None,
        })
        .collect();
    if let Some(atoms) = member_atoms.filter(|atoms| f.atoms().iter().all(|a| atoms.contains(&a))) {
        // a Boolean combination of members: every sign pattern is consistent
        for mask in 0..1u64 << k {
            let bit = |a: &Atom| atoms.iter().position(|b| *b == a).map(|i| mask >> i & 1 == 1);
            if f.eval_with(&mut |a| bit(a)) == Some(true) {
                let xs: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
                let ys: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 0).collect();
                acc += normal_form_value(spec, &xs, &ys);
            }
        }
        return Ok(acc);
    }
    for mask in 0..1u64 << k {
        let cell = family_cell(&members, mask);
        let inside = realize_in_standard_model(frag, &Formula::and(vec![cell.clone(), f.clone()]))?.is_some();
        let outside = realize_in_standard_model(frag, &Formula::and(vec![cell, Formula::not(f.clone())]))?.is_some();
        match (inside, outside) {
            (true, true) => {
                return Err(Error::Unsupported(format!(
                    "`{f}` is not in the algebra generated by the family"
                )))
            }
            (false, false) => return Err(Error::Dependent(format!("sign pattern {mask:b} is inconsistent"))),
            (true, false) => {
                let xs: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
                let ys: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 0).collect();
                acc += normal_form_value(spec, &xs, &ys);
            }
            (false, true) => {}
        }
    }
    Ok(acc)
}

fn match_term(p: &Term, t: &Term, params: &[String], bind: &mut BTreeMap<String, Term>) -> bool {
    match (p, t) {
        (Term::Var(n, _), t) if params.contains(n) => match bind.get(n) {
            Some(b) => b == t,
            None => {
                bind.insert(n.clone(), t.clone());
                true
            }
        },
        (Term::Meet(a, b), Term::Meet(c, d)) | (Term::Join(a, b), Term::Join(c, d)) => {
            match_term(a, c, params, bind) && match_term(b, d, params, bind)
        }
        (Term::Comp(a), Term::Comp(c)) => match_term(a, c, params, bind),
        (p, t) => p == t,
    }
}

fn match_atom(p: &Atom, a: &Atom, params: &[String], bind: &mut BTreeMap<String, Term>) -> bool {
    if std::mem::discriminant(p) != std::mem::discriminant(a) {
        return false;
    }
    let (pt, at) = (p.terms(), a.terms());
    if pt.len() != at.len() || !pt.iter().zip(at.iter()).all(|(s, t)| match_term(s, t, params, bind)) {
        return false;
    }
    !matches!(p, Atom::Cmp(..)) || Formula::Atom(p.clone()).substitute(bind) == Formula::Atom(a.clone())
}

fn match_formula(p: &Formula, f: &Formula, params: &[String], bind: &mut BTreeMap<String, Term>) -> bool {
    match (p, f) {
        (Formula::True, Formula::True) | (Formula::False, Formula::False) => true,
        (Formula::Atom(a), Formula::Atom(b)) => match_atom(a, b, params, bind),
        (Formula::Not(a), Formula::Not(b)) => match_formula(a, b, params, bind),
        (Formula::And(xs), Formula::And(ys)) | (Formula::Or(xs), Formula::Or(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(a, b)| match_formula(a, b, params, bind))
        }
        _ => false,
    }
}

/// Matches `f` (in the measure variable `x`) against the schema and returns
/// the entry with the binding of its parameter variables.
pub fn schema_match<'a>(
    s: &'a Schema,
    x: &str,
    f: &Formula,
) -> Option<(&'a SchemaEntry, BTreeMap<String, Term>)> {
    let g = rename(f, x, &s.var);
    for e in &s.entries {
        let mut bind = BTreeMap::new();
        if match_formula(&e.pattern, &g, &e.params, &mut bind) && e.params.iter().all(|p| bind.contains_key(p)) {
            return Some((e, bind));
        }
    }
    None
}

/// Value of a schema measure on an instance at (possibly new) parameters:
/// the value of the first cell whose guard the parameters satisfy.
pub fn extend_definable_schema(s: &Schema, x: &str, f: &Formula, frag: &Fragment) -> Result<Rational> {
    let (entry, bind) = schema_match(s, x, f).ok_or_else(|| Error::SchemaIncomplete(f.to_string()))?;
    for (guard, v) in &entry.cells {
        let g = guard.substitute(&bind);
        if !g.free_vars().is_empty() {
            return pre(format!("guard `{g}` is not ground after matching"));
        }
        if frag.holds(&g)? {
            return Ok(v.clone());
        }
    }
    Err(Error::SchemaIncomplete(format!("{f}: no guard holds")))
}

/// Checks that each entry's guards partition the parameter space.
pub fn verify_schema(s: &Schema, frag: &Fragment) -> Result<()> {
    for e in &s.entries {
        if let Some((_, v)) = e.cells.iter().find(|(_, v)| !in_unit(v)) {
            return pre(format!("schema value {} outside [0,1]", fmt_rat(v)));
        }
        let guards: Vec<&Formula> = e.cells.iter().map(|(g, _)| g).collect();
        for (i, g) in guards.iter().enumerate() {
            for h in &guards[i + 1..] {
                let both = Formula::and(vec![(*g).clone(), (*h).clone()]);
                if realize_in_standard_model(frag, &both)?.is_some() {
                    return pre(format!("guards `{g}` and `{h}` overlap"));
                }
            }
        }
        let none = Formula::not(Formula::or(guards.iter().map(|g| (*g).clone()).collect()));
        if realize_in_standard_model(frag, &none)?.is_some() {
            return Err(Error::SchemaIncomplete(format!("guards of `{}` do not cover", e.pattern)));
        }
    }
    Ok(())
}

impl GlobalType {
    /// A realization over the fragment: the extended fragment and the new element.
    pub fn realize(&self, frag: &Fragment) -> Result<(Fragment, Value)> {
        let th = frag.theory;
        let mut out = frag.clone();
        match self {
            GlobalType::TernaryP { witnesses } => {
                if th != TheoryId::TR {
                    return unsupported(format!("ternary type over {th}"));
                }
                let ws: Vec<usize> = witnesses.iter().map(|w| frag.vertex_of(w)).collect::<Result<_>>()?;
                let v = out.new_vertex();
                let n = frag.vertex_count();
                for b in 0..n {
                    for c in 0..n {
                        if ws.iter().any(|&a| frag.rel.holds_r(a, b, c)) {
                            out.rel.add_r(v, b, c);
                        }
                    }
                }
                Ok((out, Value::Vertex(v)))
            }
            GlobalType::TernaryQ { var, pairs } => {
                if th != TheoryId::TR {
                    return unsupported(format!("ternary type over {th}"));
                }
                let v = out.new_vertex();
                for (a, tau) in pairs {
                    let av = frag.vertex_of(a)?;
                    for c in 0..frag.vertex_count() {
                        let mut env = Env::new();
                        env.insert(var.clone(), Value::Vertex(c));
                        if frag.eval(tau, &env)? {
                            out.rel.add_r(av, v, c);
                        }
                    }
                }
                Ok((out, Value::Vertex(v)))
            }
            GlobalType::NonAdjacent => {
                if !th.is_graph() {
                    return unsupported(format!("non-adjacent type over {th}"));
                }
                let v = out.new_vertex();
                Ok((out, Value::Vertex(v)))
            }
            GlobalType::Covering => match th {
                TheoryId::THalfInf | TheoryId::THalfInfPQ => {
                    let n = out.fresh_index();
                    let pts: Vec<Rational> = frag
                        .params()
                        .filter_map(|(_, v)| match v {
                            Value::Point(p) => Some(p.coord(n)),
                            _ => None,
                        })
                        .collect();
                    let half = Rational::new(1.into(), 2.into());
                    let set = carve_interval_subset(&IntervalUnion::full(), &pts, &half)?;
                    Ok((out, Value::Q(QElem::pair(n, set))))
                }
                TheoryId::THalf => {
                    let pts: Vec<Rational> = frag
                        .params()
                        .filter_map(|(_, v)| match v {
                            Value::Unit(a) => Some(a.clone()),
                            _ => None,
                        })
                        .collect();
                    let taken: Vec<HalfSet> = frag
                        .params()
                        .filter_map(|(_, v)| match v {
                            Value::Half(h) => Some(h.clone()),
                            _ => None,
                        })
                        .collect();
                    Ok((out, Value::Half(cover_points_avoiding(&pts, &taken)?)))
                }
                t => unsupported(format!("covering type over {t}")),
            },
        }
    }

    /// `d φ`: a formula in the other variables equivalent to `φ(x, ·) ∈ p`.
    pub fn definition(&self, x: &str, f: &Formula) -> Option<Formula> {
        if matches!(self, GlobalType::Covering) {
            return None;
        }
        let mut failed = false;
        let out = f.map_atoms(&mut |a| {
            if !a.terms().iter().any(|t| is_x(t, x)) {
                return Formula::Atom(a.clone());
            }
            match (self, a) {
                (_, Atom::Eq(s, t)) => {
                    if s == t {
                        Formula::True
                    } else {
                        Formula::False
                    }
                }
                (GlobalType::TernaryP { witnesses }, Atom::R(s, t, u)) if is_x(s, x) && !is_x(t, x) && !is_x(u, x) => {
                    Formula::or(
                        witnesses
                            .iter()
                            .map(|w| Formula::Atom(Atom::R(Term::param(w, Sort::Vertex), t.clone(), u.clone())))
                            .collect(),
                    )
                }
                (GlobalType::TernaryQ { var, pairs }, Atom::R(s, t, u)) if is_x(t, x) && !is_x(s, x) && !is_x(u, x) => {
                    Formula::or(
                        pairs
                            .iter()
                            .map(|(w, tau)| {
                                let mut m = BTreeMap::new();
                                m.insert(var.clone(), u.clone());
                                Formula::and(vec![
                                    Formula::Atom(Atom::Eq(s.clone(), Term::param(w, Sort::Vertex))),
                                    tau.substitute(&m),
                                ])
                            })
                            .collect(),
                    )
                }
                (GlobalType::TernaryP { .. } | GlobalType::TernaryQ { .. }, Atom::R(..)) => Formula::False,
                (GlobalType::NonAdjacent, Atom::E(..)) => Formula::False,
                _ => {
                    failed = true;
                    Formula::False
                }
            }
        });
        (!failed).then_some(out)
    }
}

/// Reads a measure spec such as `coinflip`, `coinflip:1/3`, `dirac:a`,
/// `av:a,b`, `cube`, `type:nonadjacent`, `type:covering`,
/// `type:ternary-p:a0,a1`, `indep:1/3=R(x,a,a);1/4=R(x,a,b)` or
/// `convex:1/2*dirac:a|1/2*dirac:b`.
pub fn parse_measure(spec: &str, frag: &Fragment) -> Result<Measure> {
    let bad = |msg: String| Error::Parse { pos: 0, msg };
    let spec = spec.trim();
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let value = |name: &str| -> Result<Value> {
        frag.value(name.trim()).cloned().ok_or_else(|| bad(format!("unknown parameter `{}`", name.trim())))
    };
    match head {
        "coinflip" => {
            let bias = if rest.is_empty() { Rational::new(1.into(), 2.into()) } else { parse_rat(rest)? };
            Ok(Measure::CoinFlip { bias })
        }
        "dirac" => Ok(Measure::dirac(value(rest)?)),
        "av" => Ok(Measure::Average(rest.split(',').map(value).collect::<Result<_>>()?)),
        "cube" => Ok(Measure::CubeLebesgue),
        "type" => {
            let (kind, args) = rest.split_once(':').unwrap_or((rest, ""));
            match kind {
                "nonadjacent" => Ok(Measure::Dirac(Point::Type(GlobalType::NonAdjacent))),
                "covering" => Ok(Measure::Dirac(Point::Type(GlobalType::Covering))),
                "ternary-p" => Ok(Measure::Dirac(Point::Type(GlobalType::TernaryP {
                    witnesses: args.split(',').map(|s| s.trim().to_string()).collect(),
                }))),
                k => Err(bad(format!("unknown type `{k}`"))),
            }
        }
        "indep" => {
            let mut family = Vec::new();
            let mut f = Vec::new();
            for part in rest.split(';').filter(|p| !p.trim().is_empty()) {
                let (v, a) = part.split_once('=').ok_or_else(|| bad(format!("bad member `{part}`")))?;
                f.push(parse_rat(v)?);
                family.push(frag.parse_formula(a)?);
            }
            let var = family
                .iter()
                .flat_map(|a| a.free_vars().into_keys())
                .next()
                .unwrap_or_else(|| "x".to_string());
            independent_family_measure(IndependentFamilySpec { var, family, f }, frag)
        }
        "convex" => {
            let mut parts = Vec::new();
            for part in rest.split('|') {
                let (w, m) = part.split_once('*').ok_or_else(|| bad(format!("bad component `{part}`")))?;
                parts.push((parse_rat(w)?, parse_measure(m, frag)?));
            }
            convex_combine(parts)
        }
        h => Err(bad(format!("unknown measure `{h}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::frac;

    fn frag(text: &str) -> Fragment {
        Fragment::from_text(text).unwrap()
    }

    fn x() -> Vec<String> {
        vec!["x".to_string()]
    }

    fn ev(m: &Measure, f: &Fragment, s: &str) -> Rational {
        m.eval(&x(), &f.parse_formula(s).unwrap(), f).unwrap()
    }

    #[test]
    fn coin_flip_values() {
        let f = frag("theory tr\nparam a, b\n");
        let m = Measure::coin_flip();
        assert_eq!(ev(&m, &f, "R(x,a,a) & !R(x,a,b)"), frac(1, 4));
        assert_eq!(ev(&m, &f, "R(x,a,a) | R(x,a,b)"), frac(3, 4));
        assert_eq!(ev(&m, &f, "x = a | R(x,x,x)"), frac(1, 2));
        assert_eq!(ev(&m, &f, "x = x"), frac(1, 1));
        assert!(m.eval(&x(), &f.parse_formula("R(x,a,a)").unwrap(), &frag("theory henson 3\n")).is_err());
    }

    #[test]
    fn convex_pointwise() {
        let f = frag("theory tr\nparam a, b\n");
        let da = Measure::dirac(f.value("a").unwrap().clone());
        let db = Measure::dirac(f.value("b").unwrap().clone());
        let m = convex_combine(vec![(frac(1, 2), da.clone()), (frac(1, 2), db)]).unwrap();
        assert_eq!(ev(&m, &f, "x = a"), frac(1, 2));
        let m = convex_combine(vec![(frac(1, 3), Measure::coin_flip()), (frac(2, 3), da)]).unwrap();
        assert_eq!(ev(&m, &f, "R(x,a,a)"), frac(1, 6));
        assert!(convex_combine(vec![(frac(1, 3), Measure::coin_flip())]).is_err());
    }

    #[test]
    fn cube_lebesgue() {
        let f = frag("theory thalf-inf\nparam b : Q = 0:[0,1/2)\nparam c : Q = 1:[0,1/2)\nparam p : P\n");
        let m = Measure::CubeLebesgue;
        assert_eq!(ev(&m, &f, "x sqin b & x sqin c"), frac(1, 4));
        assert_eq!(ev(&m, &f, "x sqin b | x sqin c"), frac(3, 4));
        assert!(ev(&m, &f, "x sqin (b join c)").is_one());
        assert_eq!(ev(&m, &f, "x = p | x sqin bot"), frac(0, 1));
    }

    #[test]
    fn independent_family() {
        let f = frag("theory tr\nparam a, b\n");
        let fam = vec![f.parse_formula("R(x,a,a)").unwrap(), f.parse_formula("R(x,a,b)").unwrap()];
        let spec = IndependentFamilySpec { var: "x".into(), family: fam.clone(), f: vec![frac(1, 3), frac(1, 4)] };
        let m = independent_family_measure(spec, &f).unwrap();
        assert_eq!(ev(&m, &f, "R(x,a,a) & !R(x,a,b)"), frac(1, 4));
        assert_eq!(ev(&m, &f, "R(x,a,a) | R(x,a,b)"), frac(1, 3) + frac(1, 4) - frac(1, 12));
        assert!(ev(&m, &f, "x = x").is_one());
        let bad = vec![fam[0].clone(), Formula::not(fam[0].clone())];
        assert!(!check_independence(&bad, &f).unwrap());
        let g = frag("theory henson 3\nparam a, b\nfact E(a,b)\n");
        let tri = vec![g.parse_formula("E(x,a)").unwrap(), g.parse_formula("E(x,b)").unwrap()];
        assert!(!check_independence(&tri, &g).unwrap());
        assert!(check_independence(&fam, &f).unwrap());
    }

    #[test]
    fn schemas() {
        let f = frag("theory tr\nparam b, c\n");
        let pattern = f.parse_formula("R(x,y,z)").unwrap();
        let s = Schema {
            var: "x".into(),
            entries: vec![SchemaEntry {
                pattern,
                params: vec!["y".into(), "z".into()],
                cells: vec![(Formula::True, frac(1, 2))],
            }],
        };
        verify_schema(&s, &f).unwrap();
        let m = Measure::Schema(s.clone());
        assert_eq!(ev(&m, &f, "R(x,b,c)"), frac(1, 2));
        assert!(matches!(m.eval(&x(), &f.parse_formula("R(b,x,c)").unwrap(), &f), Err(Error::SchemaIncomplete(_))));
        let g = frag("theory thalf-inf\nparam b : Q = 0:[0,1/2)\n");
        let pattern = g.parse_formula("x sqin y & l(y) = 1/2").unwrap();
        let half = g.parse_formula("l(y) = 1/2").unwrap();
        let s = Schema {
            var: "x".into(),
            entries: vec![SchemaEntry {
                pattern,
                params: vec!["y".into()],
                cells: vec![(half.clone(), frac(1, 2)), (Formula::not(half), frac(0, 1))],
            }],
        };
        assert_eq!(ev(&Measure::Schema(s), &g, "x sqin b & l(b) = 1/2"), frac(1, 2));
    }

    #[test]
    fn covering_types() {
        let f = frag("theory thalf-inf\nparam p : P\nparam q : P = {0: 1/3}\n");
        let m = Measure::Dirac(Point::Type(GlobalType::Covering));
        let y = vec!["y".to_string()];
        let g = f.parse_formula("p sqin y & q sqin y & l(y) = 1/2 & y != top").unwrap();
        assert!(m.eval(&y, &g, &f).unwrap().is_one());
        let h = frag("theory thalf\nparam u : P = 1/10\nparam b : Q = [0,1/2)\n");
        let g = h.parse_formula("u sqin y & y != b").unwrap();
        assert!(m.eval(&y, &g, &h).unwrap().is_one());
    }

    #[test]
    fn parsing_specs() {
        let f = frag("theory tr\nparam a, b\n");
        assert_eq!(parse_measure("coinflip", &f).unwrap(), Measure::coin_flip());
        let m = parse_measure("convex:1/2*dirac:a|1/2*av:a,b", &f).unwrap();
        assert_eq!(ev(&m, &f, "x = a"), frac(3, 4));
        let m = parse_measure("indep:1/3=R(x,a,a);1/4=R(x,a,b)", &f).unwrap();
        assert_eq!(ev(&m, &f, "R(x,a,a) & !R(x,a,b)"), frac(1, 4));
        assert!(parse_measure("nope", &f).is_err());
    }
}
