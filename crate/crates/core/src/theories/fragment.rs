//! Fragments: a theory plus finitely many named parameters with standard values.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use indexmap::IndexMap;
use num_traits::Zero;

use super::halfset::HalfSet;
use super::qelem::{parse_coords, PElem, QElem, Registry};
use super::relational::Relations;
use super::{TheoryId, Value};
use crate::error::{pre, unsupported, Error, Result};
use crate::formula::{
    is_var_name, parse_with, Atom, CmpOp, Formula, LinAtom, LinExpr, ParseOptions, Sort, Term,
};
use crate::scalar::{fmt_rat, parse_rat};
use crate::Rational;

/// Values of free variables.
pub type Env = BTreeMap<String, Value>;

/// A finite parameter set with a complete diagram.
///
/// Relational diagrams are closed-world: an atom among parameters holds iff it
/// is recorded in `rel`. Parameters always denote pairwise distinct vertices.
#[derive(Debug, Clone)]
pub struct Fragment {
    pub theory: TheoryId,
    params: IndexMap<String, Value>,
    pub rel: Relations,
    pub registry: Registry,
    vertices: usize,
    next_index: usize,
}

impl Fragment {
    pub fn new(theory: TheoryId) -> Fragment {
        Fragment {
            theory,
            params: IndexMap::new(),
            rel: Relations::default(),
            registry: Registry::default(),
            vertices: 0,
            next_index: 0,
        }
    }

    pub fn add_param(&mut self, name: &str, value: Value) -> Result<()> {
        if name.is_empty() || is_var_name(name) {
            return pre(format!("parameter name `{name}` clashes with the variable convention"));
        }
        if self.params.contains_key(name) {
            return pre(format!("duplicate parameter `{name}`"));
        }
        if !self.theory.allows_sort(value.sort()) {
            return pre(format!("{} has no sort {}", self.theory, value.sort()));
        }
        match (&value, self.theory) {
            (Value::Vertex(v), _) if *v >= self.vertices => return pre(format!("unknown vertex {v}")),
            (Value::Point(_) | Value::Q(_) | Value::Real(_), TheoryId::THalfInf | TheoryId::THalfInfPQ) => {}
            (Value::Unit(a), TheoryId::THalf) => super::halfset::unit_point(a)?,
            (Value::Half(_), TheoryId::THalf) | (Value::Vertex(_), _) => {}
            (v, t) => return pre(format!("value {v} does not belong to {t}")),
        }
        match &value {
            Value::Q(QElem::Pair(n, _)) => self.note_index(*n),
            Value::Point(p) => {
                if let Some(&n) = p.fixed.keys().next_back() {
                    self.note_index(n);
                }
            }
            _ => {}
        }
        self.params.insert(name.to_string(), value);
        Ok(())
    }

    /// Adds a parameter denoting a new vertex.
    pub fn add_vertex(&mut self, name: &str) -> Result<usize> {
        let v = self.new_vertex();
        self.add_param(name, Value::Vertex(v))?;
        Ok(v)
    }

    /// A vertex outside every parameter's value.
    pub fn new_vertex(&mut self) -> usize {
        self.vertices += 1;
        self.vertices - 1
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    /// A copy index of Q not used by any parameter or earlier call.
    pub fn fresh_index(&mut self) -> usize {
        self.next_index += 1;
        self.next_index - 1
    }

    pub fn note_index(&mut self, n: usize) {
        self.next_index = self.next_index.max(n + 1);
    }

    /// Registers a new point of `THalfInf`.
    pub fn new_point(&mut self, fixed: BTreeMap<usize, Rational>) -> Result<PElem> {
        self.registry.point(fixed)
    }

    pub fn value(&self, name: &str) -> Option<&Value> {
        self.params.get(name)
    }

    pub fn sort_of(&self, name: &str) -> Option<Sort> {
        self.params.get(name).map(Value::sort)
    }

    pub fn params(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.params.iter()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn names_of_sort(&self, sort: Sort) -> Vec<String> {
        self.params.iter().filter(|(_, v)| v.sort() == sort).map(|(n, _)| n.clone()).collect()
    }

    pub fn vertex_of(&self, name: &str) -> Result<usize> {
        match self.params.get(name) {
            Some(Value::Vertex(v)) => Ok(*v),
            Some(v) => pre(format!("`{name}` = {v} is not a vertex")),
            None => pre(format!("unknown parameter `{name}`")),
        }
    }

    /// Parameter name denoting vertex `v`, if any.
    pub fn name_of_vertex(&self, v: usize) -> Option<&str> {
        self.params.iter().find(|(_, x)| **x == Value::Vertex(v)).map(|(n, _)| n.as_str())
    }

    pub fn parse_options(&self) -> ParseOptions {
        ParseOptions {
            sorts: self.params.iter().map(|(n, v)| (n.clone(), v.sort())).collect(),
            default_sort: self.theory.default_sort(),
        }
    }

    pub fn parse_formula(&self, text: &str) -> Result<Formula> {
        let f = parse_with(text, &self.parse_options())?;
        for (p, s) in f.params() {
            match self.sort_of(&p) {
                Some(t) if t == s => {}
                Some(t) => return pre(format!("parameter `{p}` has sort {t}, used as {s}")),
                None => return pre(format!("unknown parameter `{p}`")),
            }
        }
        Ok(f)
    }

    /// Records a positive relational fact among parameters.
    pub fn add_fact(&mut self, atom: &Atom) -> Result<()> {
        let v = |t: &Term| -> Result<usize> {
            match t {
                Term::Param(n, _) => self.vertex_of(n),
                t => pre(format!("fact argument `{t}` is not a parameter")),
            }
        };
        match (atom, self.theory) {
            (Atom::R(a, b, c), TheoryId::TR) => {
                let (a, b, c) = (v(a)?, v(b)?, v(c)?);
                self.rel.add_r(a, b, c);
            }
            (Atom::E(a, b), t) if t.is_graph() => {
                let (a, b) = (v(a)?, v(b)?);
                if !self.rel.add_e(a, b) {
                    return Err(Error::Inconsistent(format!("loop {atom}")));
                }
                if let TheoryId::Henson(s) = t {
                    if let Some(k) = self.rel.find_clique(s) {
                        return Err(Error::Inconsistent(format!("edges form a K_{s} on {k:?}")));
                    }
                }
            }
            _ => return pre(format!("`{atom}` is not a relational fact of {}", self.theory)),
        }
        Ok(())
    }

    pub fn eval_term(&self, t: &Term, env: &Env) -> Result<Value> {
        let lookup = |n: &str, var: bool| -> Result<Value> {
            let v = if var { env.get(n) } else { self.params.get(n) };
            v.cloned().ok_or_else(|| {
                Error::Precondition(format!("no value for {} `{n}`", if var { "variable" } else { "parameter" }))
            })
        };
        let q = |v: Value| -> Result<QElem> {
            match v {
                Value::Q(q) => Ok(q),
                v => pre(format!("{v} is not a Q element of {}", self.theory)),
            }
        };
        Ok(match t {
            Term::Var(n, _) => lookup(n, true)?,
            Term::Param(n, _) => lookup(n, false)?,
            Term::Bot => Value::Q(QElem::Bot),
            Term::Top => Value::Q(QElem::Top),
            Term::Meet(a, b) => Value::Q(q(self.eval_term(a, env)?)?.meet(&q(self.eval_term(b, env)?)?)),
            Term::Join(a, b) => Value::Q(q(self.eval_term(a, env)?)?.join(&q(self.eval_term(b, env)?)?)),
            Term::Comp(a) => Value::Q(q(self.eval_term(a, env)?)?.comp()),
        })
    }

    pub fn eval_lin(&self, e: &LinExpr, env: &Env) -> Result<Rational> {
        let mut acc = e.constant.clone();
        for (a, c) in &e.terms {
            let v = match a {
                LinAtom::Ell(t) => match self.eval_term(t, env)? {
                    Value::Q(q) => q.ell(),
                    v => return pre(format!("l() applied to {v}")),
                },
                LinAtom::Var(n) => match env.get(n) {
                    Some(Value::Real(r)) => r.clone(),
                    _ => return pre(format!("no real value for `{n}`")),
                },
                LinAtom::Param(n) => match self.params.get(n) {
                    Some(Value::Real(r)) => r.clone(),
                    _ => return pre(format!("no real value for `{n}`")),
                },
            };
            acc += v * c;
        }
        Ok(acc)
    }

    pub fn eval_atom(&self, a: &Atom, env: &Env) -> Result<bool> {
        let th = self.theory;
        let vertex = |t: &Term| -> Result<usize> {
            match self.eval_term(t, env)? {
                Value::Vertex(v) if v < self.vertices => Ok(v),
                v => pre(format!("{v} is not a vertex of the fragment")),
            }
        };
        match a {
            Atom::R(x, y, z) if th == TheoryId::TR => Ok(self.rel.holds_r(vertex(x)?, vertex(y)?, vertex(z)?)),
            Atom::E(x, y) if th.is_graph() => Ok(self.rel.holds_e(vertex(x)?, vertex(y)?)),
            Atom::Eq(x, y) => Ok(self.eval_term(x, env)? == self.eval_term(y, env)?),
            Atom::Sqin(x, y) if th.is_pq() || th == TheoryId::THalf => {
                match (self.eval_term(x, env)?, self.eval_term(y, env)?) {
                    (Value::Point(p), Value::Q(q)) => Ok(q.holds_at(|k| p.coord(k))),
                    (Value::Unit(u), Value::Half(h)) => Ok(h.contains(&u)),
                    (u, v) => pre(format!("cannot decide {u} sqin {v}")),
                }
            }
            Atom::Sim(x, y) if th.is_pq() => match (self.eval_term(x, env)?, self.eval_term(y, env)?) {
                (Value::Q(b), Value::Q(c)) => Ok(b.sim(&c)),
                (u, v) => pre(format!("cannot decide {u} sim {v}")),
            },
            Atom::Cmp(op, l, r) if th == TheoryId::THalfInf => {
                let d = self.eval_lin(l, env)? - self.eval_lin(r, env)?;
                Ok(match op {
                    CmpOp::Eq => d.is_zero(),
                    CmpOp::Lt => d < Rational::zero(),
                })
            }
            a => unsupported(format!("atom `{a}` in theory {th}")),
        }
    }

    /// Truth of a quantifier-free formula under `env`.
    pub fn eval(&self, f: &Formula, env: &Env) -> Result<bool> {
        match f {
            Formula::True => Ok(true),
            Formula::False => Ok(false),
            Formula::Atom(a) => self.eval_atom(a, env),
            Formula::Not(g) => Ok(!self.eval(g, env)?),
            Formula::And(gs) => {
                for g in gs {
                    if !self.eval(g, env)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Or(gs) => {
                for g in gs {
                    if self.eval(g, env)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Formula::Exists(..) | Formula::Forall(..) => {
                pre("standard-model evaluation needs a quantifier-free formula")
            }
        }
    }

    /// Truth of a sentence over the parameters.
    pub fn holds(&self, f: &Formula) -> Result<bool> {
        self.eval(f, &Env::new())
    }

    /// Reads the structured text format documented in the README.
    pub fn from_text(text: &str) -> Result<Fragment> {
        let mut frag: Option<Fragment> = None;
        let mut facts = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { pos: lineno + 1, msg };
            let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match kw {
                "theory" => {
                    if frag.is_some() {
                        return Err(err("theory declared twice".into()));
                    }
                    frag = Some(Fragment::new(rest.parse()?));
                }
                "param" => {
                    let f = frag.as_mut().ok_or_else(|| err("param before theory".into()))?;
                    let (decl, value) = match rest.split_once('=') {
                        Some((d, v)) => (d.trim(), Some(v.trim())),
                        None => (rest, None),
                    };
                    let (names, sort) = match decl.split_once(':') {
                        Some((n, s)) => (n.trim(), Some(s.trim())),
                        None => (decl, None),
                    };
                    for name in names.split(',').map(str::trim) {
                        f.declare(name, sort, value).map_err(|e| err(e.to_string()))?;
                    }
                }
                "fact" => facts.push((lineno + 1, rest.to_string())),
                other => return Err(err(format!("unknown keyword `{other}`"))),
            }
        }
        let mut f = frag.ok_or_else(|| Error::Parse { pos: 0, msg: "missing theory line".into() })?;
        for (lineno, text) in facts {
            let atom = match f.parse_formula(&text)? {
                Formula::Atom(a) => a,
                other => return Err(Error::Parse { pos: lineno, msg: format!("fact `{other}` is not an atom") }),
            };
            f.add_fact(&atom)?;
        }
        Ok(f)
    }

    fn declare(&mut self, name: &str, sort: Option<&str>, value: Option<&str>) -> Result<()> {
        let sort = match sort.map(str::to_ascii_lowercase).as_deref() {
            None | Some("vertex") if self.theory.is_relational() => Sort::Vertex,
            Some("p") => Sort::P,
            Some("q") => Sort::Q,
            Some("r") => Sort::R,
            None => return pre(format!("parameter `{name}` needs a sort")),
            Some(s) => return pre(format!("unknown sort `{s}`")),
        };
        let value = match (sort, self.theory, value) {
            (Sort::Vertex, _, None) => return self.add_vertex(name).map(|_| ()),
            (Sort::P, TheoryId::THalf, Some(v)) => Value::Unit(parse_rat(v)?),
            (Sort::Q, TheoryId::THalf, Some(v)) => {
                let (set, n) = match v.split_once('@') {
                    Some((s, n)) => (s, Some(n)),
                    None => (v, None),
                };
                let set = set.parse()?;
                Value::Half(match n {
                    Some(n) => HalfSet::new(
                        n.trim().parse().map_err(|_| Error::Parse { pos: 0, msg: format!("bad n `{n}`") })?,
                        set,
                    )?,
                    None => HalfSet::from_set(set)?,
                })
            }
            (Sort::P, _, v) => {
                let fixed = match v {
                    Some(v) => parse_coords(v)?,
                    None => BTreeMap::new(),
                };
                Value::Point(self.registry.point(fixed)?)
            }
            (Sort::Q, _, Some(v)) => Value::Q(v.parse()?),
            (Sort::R, _, Some(v)) => Value::Real(parse_rat(v)?),
            (s, _, _) => return pre(format!("parameter `{name}` of sort {s} needs a value")),
        };
        self.add_param(name, value)
    }

    /// Renders the fragment in the format read by [`Fragment::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = format!("theory {}\n", self.theory);
        for (n, v) in &self.params {
            let _ = match v {
                Value::Vertex(_) => writeln!(out, "param {n} : vertex"),
                Value::Point(p) => {
                    let body: Vec<String> =
                        p.fixed.iter().map(|(k, x)| format!("{k}: {}", fmt_rat(x))).collect();
                    writeln!(out, "param {n} : P = {{{}}}", body.join(", "))
                }
                Value::Unit(a) => writeln!(out, "param {n} : P = {}", fmt_rat(a)),
                Value::Q(q) => writeln!(out, "param {n} : Q = {q}"),
                Value::Half(h) => writeln!(out, "param {n} : Q = {h}"),
                Value::Real(r) => writeln!(out, "param {n} : R = {}", fmt_rat(r)),
            };
        }
        let name = |v: usize| self.name_of_vertex(v).unwrap_or("?").to_string();
        for [a, b, c] in &self.rel.r {
            let _ = writeln!(out, "fact R({},{},{})", name(*a), name(*b), name(*c));
        }
        for (a, b) in &self.rel.e {
            let _ = writeln!(out, "fact E({},{})", name(*a), name(*b));
        }
        out
    }

    /// A fragment whose parameters are those mentioned in `f`, each a new
    /// element with an empty diagram.
    pub fn synthesize(theory: TheoryId, f: &Formula) -> Result<Fragment> {
        let mut frag = Fragment::new(theory);
        for (name, sort) in f.params() {
            match sort {
                Sort::Vertex => {
                    frag.add_vertex(&name)?;
                }
                Sort::P if theory == TheoryId::THalf => {
                    let v = frag.registry.fresh_in(&super::IntervalUnion::full())?;
                    frag.add_param(&name, Value::Unit(v))?;
                }
                Sort::P => {
                    let p = frag.registry.point(BTreeMap::new())?;
                    frag.add_param(&name, Value::Point(p))?;
                }
                s => return pre(format!("cannot synthesize a value for `{name}` of sort {s}; supply a fragment file")),
            }
        }
        Ok(frag)
    }
}
