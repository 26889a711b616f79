use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    P,
    Q,
    R,
    Vertex,
}

impl std::fmt::Display for Sort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Sort::P => "P",
            Sort::Q => "Q",
            Sort::R => "R",
            Sort::Vertex => "vertex",
        };
        f.write_str(s)
    }
}

/// A non-R term. Lattice operations only combine Q-sort terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String, Sort),
    Param(String, Sort),
    Bot,
    Top,
    Meet(Box<Term>, Box<Term>),
    Join(Box<Term>, Box<Term>),
    Comp(Box<Term>),
}

impl Term {
    pub fn var(name: &str, sort: Sort) -> Term {
        Term::Var(name.to_string(), sort)
    }

    pub fn param(name: &str, sort: Sort) -> Term {
        Term::Param(name.to_string(), sort)
    }

    pub fn meet(a: Term, b: Term) -> Term {
        Term::Meet(Box::new(a), Box::new(b))
    }

    pub fn join(a: Term, b: Term) -> Term {
        Term::Join(Box::new(a), Box::new(b))
    }

    pub fn comp(a: Term) -> Term {
        Term::Comp(Box::new(a))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Var(_, s) | Term::Param(_, s) => *s,
            _ => Sort::Q,
        }
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Term::Var(n, _) | Term::Param(n, _) => Some(n),
            _ => None,
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Term::Var(..) | Term::Param(..) | Term::Bot | Term::Top)
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        f(self);
        match self {
            Term::Meet(a, b) | Term::Join(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Term::Comp(a) => a.visit(f),
            _ => {}
        }
    }

    pub fn map_leaves(&self, f: &impl Fn(&Term) -> Term) -> Term {
        match self {
            Term::Meet(a, b) => Term::meet(a.map_leaves(f), b.map_leaves(f)),
            Term::Join(a, b) => Term::join(a.map_leaves(f), b.map_leaves(f)),
            Term::Comp(a) => Term::comp(a.map_leaves(f)),
            t => f(t),
        }
    }

    pub fn mentions_var(&self, name: &str) -> bool {
        let mut hit = false;
        self.visit(&mut |t| {
            if let Term::Var(n, _) = t {
                hit |= n == name;
            }
        });
        hit
    }
}

/// Summands of an R-sort linear term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinAtom {
    Ell(Term),
    Var(String),
    Param(String),
}

/// Formal rational combination of [`LinAtom`]s plus a constant multiple of 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LinExpr {
    pub terms: BTreeMap<LinAtom, Rational>,
    pub constant: Rational,
}

impl LinExpr {
    pub fn zero() -> LinExpr {
        LinExpr::default()
    }

    pub fn constant(c: Rational) -> LinExpr {
        LinExpr { terms: BTreeMap::new(), constant: c }
    }

    pub fn atom(a: LinAtom) -> LinExpr {
        let mut e = LinExpr::zero();
        e.add_term(a, Rational::one());
        e
    }

    pub fn add_term(&mut self, a: LinAtom, c: Rational) {
        let slot = self.terms.entry(a.clone()).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&a);
        }
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.add_term(a.clone(), c.clone());
        }
        out.constant += &other.constant;
        out
    }

    pub fn scale(&self, k: &Rational) -> LinExpr {
        if k.is_zero() {
            return LinExpr::zero();
        }
        LinExpr {
            terms: self.terms.iter().map(|(a, c)| (a.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, a: &LinAtom) -> Rational {
        self.terms.get(a).cloned().unwrap_or_else(Rational::zero)
    }

    /// Replaces every atom by a linear expression.
    pub fn substitute(&self, f: &impl Fn(&LinAtom) -> LinExpr) -> LinExpr {
        let mut out = LinExpr::constant(self.constant.clone());
        for (a, c) in &self.terms {
            out = out.add(&f(a).scale(c));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Lt,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Sqin(Term, Term),
    Eq(Term, Term),
    Sim(Term, Term),
    R(Term, Term, Term),
    E(Term, Term),
    Cmp(CmpOp, LinExpr, LinExpr),
}

impl Atom {
    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Atom::Sqin(a, b) | Atom::Eq(a, b) | Atom::Sim(a, b) | Atom::E(a, b) => vec![a, b],
            Atom::R(a, b, c) => vec![a, b, c],
            Atom::Cmp(_, l, r) => l
                .terms
                .keys()
                .chain(r.terms.keys())
                .filter_map(|a| match a {
                    LinAtom::Ell(t) => Some(t),
                    _ => None,
                })
                .collect(),
        }
    }

    pub fn map_terms(&self, f: &impl Fn(&Term) -> Term, g: &impl Fn(&LinAtom) -> LinExpr) -> Atom {
        match self {
            Atom::Sqin(a, b) => Atom::Sqin(f(a), f(b)),
            Atom::Eq(a, b) => Atom::Eq(f(a), f(b)),
            Atom::Sim(a, b) => Atom::Sim(f(a), f(b)),
            Atom::E(a, b) => Atom::E(f(a), f(b)),
            Atom::R(a, b, c) => Atom::R(f(a), f(b), f(c)),
            Atom::Cmp(op, l, r) => Atom::Cmp(*op, l.substitute(g), r.substitute(g)),
        }
    }

    /// Names of variables (all sorts) occurring in the atom.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in self.terms() {
            t.visit(&mut |s| {
                if let Term::Var(n, _) = s {
                    out.insert(n.clone());
                }
            });
        }
        if let Atom::Cmp(_, l, r) = self {
            for a in l.terms.keys().chain(r.terms.keys()) {
                if let LinAtom::Var(n) = a {
                    out.insert(n.clone());
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: String,
    pub sort: Sort,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(Var, Box<Formula>),
    Forall(Var, Box<Formula>),
}

impl Formula {
    pub fn atom(a: Atom) -> Formula {
        Formula::Atom(a)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(g) => *g,
            g => Formula::Not(Box::new(g)),
        }
    }

    /// Conjunction with constant folding and flattening.
    pub fn and(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => out.extend(inner),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => out.extend(inner),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn exists(name: &str, sort: Sort, body: Formula) -> Formula {
        Formula::Exists(Var { name: name.to_string(), sort }, Box::new(body))
    }

    pub fn forall(name: &str, sort: Sort, body: Formula) -> Formula {
        Formula::Forall(Var { name: name.to_string(), sort }, Box::new(body))
    }

    pub fn is_qf(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(f) => f.is_qf(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(Formula::is_qf),
            Formula::Exists(..) | Formula::Forall(..) => false,
        }
    }

    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 0,
            Formula::Not(f) => f.quantifier_depth(),
            Formula::And(fs) | Formula::Or(fs) => {
                fs.iter().map(Formula::quantifier_depth).max().unwrap_or(0)
            }
            Formula::Exists(_, f) | Formula::Forall(_, f) => 1 + f.quantifier_depth(),
        }
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Atom>) {
        match self {
            Formula::Atom(a) => {
                out.insert(a.clone());
            }
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => f.collect_atoms(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
            _ => {}
        }
    }

    /// Free variables with their sorts.
    pub fn free_vars(&self) -> BTreeMap<String, Sort> {
        let mut out = BTreeMap::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeMap<String, Sort>) {
        match self {
            Formula::Atom(a) => {
                let mut add = |n: &str, s: Sort| {
                    if !bound.iter().any(|b| b == n) {
                        out.insert(n.to_string(), s);
                    }
                };
                for t in a.terms() {
                    t.visit(&mut |s| {
                        if let Term::Var(n, so) = s {
                            add(n, *so);
                        }
                    });
                }
                if let Atom::Cmp(_, l, r) = a {
                    for x in l.terms.keys().chain(r.terms.keys()) {
                        if let LinAtom::Var(n) = x {
                            add(n, Sort::R);
                        }
                    }
                }
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_free(bound, out)),
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                bound.push(v.name.clone());
                f.collect_free(bound, out);
                bound.pop();
            }
            _ => {}
        }
    }

    /// Parameters with their sorts.
    pub fn params(&self) -> BTreeMap<String, Sort> {
        let mut out = BTreeMap::new();
        for a in self.atoms() {
            for t in a.terms() {
                t.visit(&mut |s| {
                    if let Term::Param(n, so) = s {
                        out.insert(n.clone(), *so);
                    }
                });
            }
            if let Atom::Cmp(_, l, r) = &a {
                for x in l.terms.keys().chain(r.terms.keys()) {
                    if let LinAtom::Param(n) = x {
                        out.insert(n.clone(), Sort::R);
                    }
                }
            }
        }
        out
    }

    /// Rebuilds the formula bottom-up, replacing atoms.
    pub fn map_atoms(&self, f: &mut impl FnMut(&Atom) -> Formula) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => f(a),
            Formula::Not(g) => Formula::not(g.map_atoms(f)),
            Formula::And(gs) => Formula::and(gs.iter().map(|g| g.map_atoms(f)).collect()),
            Formula::Or(gs) => Formula::or(gs.iter().map(|g| g.map_atoms(f)).collect()),
            Formula::Exists(v, g) => Formula::Exists(v.clone(), Box::new(g.map_atoms(f))),
            Formula::Forall(v, g) => Formula::Forall(v.clone(), Box::new(g.map_atoms(f))),
        }
    }

    /// Substitutes free variables by terms (R-sort targets must be atomic).
    pub fn substitute(&self, map: &BTreeMap<String, Term>) -> Formula {
        self.subst_inner(map, &mut Vec::new())
    }

    fn subst_inner(&self, map: &BTreeMap<String, Term>, bound: &mut Vec<String>) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => {
                let live = |n: &str| -> Option<&Term> {
                    if bound.iter().any(|b| b == n) {
                        None
                    } else {
                        map.get(n)
                    }
                };
                let ft = |t: &Term| {
                    t.map_leaves(&|leaf| match leaf {
                        Term::Var(n, _) => live(n).cloned().unwrap_or_else(|| leaf.clone()),
                        _ => leaf.clone(),
                    })
                };
                let fl = |x: &LinAtom| match x {
                    LinAtom::Var(n) => match live(n) {
                        Some(Term::Param(p, _)) => LinExpr::atom(LinAtom::Param(p.clone())),
                        Some(Term::Var(v, _)) => LinExpr::atom(LinAtom::Var(v.clone())),
                        _ => LinExpr::atom(x.clone()),
                    },
                    LinAtom::Ell(t) => LinExpr::atom(LinAtom::Ell(ft(t))),
                    _ => LinExpr::atom(x.clone()),
                };
                Formula::Atom(a.map_terms(&ft, &fl))
            }
            Formula::Not(g) => Formula::Not(Box::new(g.subst_inner(map, bound))),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.subst_inner(map, bound)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.subst_inner(map, bound)).collect()),
            Formula::Exists(v, g) | Formula::Forall(v, g) => {
                bound.push(v.name.clone());
                let body = g.subst_inner(map, bound);
                bound.pop();
                if matches!(self, Formula::Exists(..)) {
                    Formula::Exists(v.clone(), Box::new(body))
                } else {
                    Formula::Forall(v.clone(), Box::new(body))
                }
            }
        }
    }

    /// Truth value under an atom valuation; `None` if some atom is undecided.
    pub fn eval_with(&self, v: &mut impl FnMut(&Atom) -> Option<bool>) -> Option<bool> {
        match self {
            Formula::True => Some(true),
            Formula::False => Some(false),
            Formula::Atom(a) => v(a),
            Formula::Not(f) => f.eval_with(v).map(|b| !b),
            Formula::And(fs) => {
                let mut all = Some(true);
                for f in fs {
                    match f.eval_with(v) {
                        Some(false) => return Some(false),
                        None => all = None,
                        _ => {}
                    }
                }
                all
            }
            Formula::Or(fs) => {
                let mut any = Some(false);
                for f in fs {
                    match f.eval_with(v) {
                        Some(true) => return Some(true),
                        None => any = None,
                        _ => {}
                    }
                }
                any
            }
            Formula::Exists(..) | Formula::Forall(..) => None,
        }
    }

    /// Replaces decided atoms by constants and folds.
    pub fn partial_eval(&self, v: &mut impl FnMut(&Atom) -> Option<bool>) -> Formula {
        self.map_atoms(&mut |a| match v(a) {
            Some(true) => Formula::True,
            Some(false) => Formula::False,
            None => Formula::Atom(a.clone()),
        })
    }

    /// Number of atom occurrences.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False => 0,
            Formula::Atom(_) => 1,
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => f.size(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(Formula::size).sum(),
        }
    }
}

/// The identifier convention: free names starting with `x`, `y` or `z` are variables.
pub fn is_var_name(name: &str) -> bool {
    matches!(name.chars().next(), Some('x' | 'y' | 'z'))
}
