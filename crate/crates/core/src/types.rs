//! Finite spaces of complete quantifier-free types over relational fragments.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{pre, unsupported, Error, Result};
use crate::formula::{Atom, Formula, Literal, Sort, Term};
use crate::theories::{Env, Fragment, TheoryId, Value};

/// Default bound on candidate diagrams per equality pattern.
pub const DEFAULT_TYPE_CAP: u64 = 1 << 22;

/// What a variable denotes inside a type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Param(String),
    /// Equal to variable `i` (itself when `i` is its own index), a new element.
    New(usize),
}

/// A (possibly partial) quantifier-free type of `vars` over a fragment.
///
/// Equalities are always complete. `rel` holds the relational atoms among
/// parameters and new variables that mention a new variable; a complete type
/// decides all of them, a cell only the relevant ones.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QfType {
    pub vars: Vec<String>,
    pub eq: Vec<Slot>,
    pub rel: BTreeMap<Atom, bool>,
}

#[derive(Debug, Clone)]
pub struct TypeSpace {
    pub fragment: Fragment,
    pub vars: Vec<String>,
    pub types: Vec<QfType>,
}

impl TypeSpace {
    /// Types containing `f`.
    pub fn clopen(&self, f: &Formula) -> Result<Vec<&QfType>> {
        let mut out = Vec::new();
        for t in &self.types {
            if t.holds(&self.fragment, f)? {
                out.push(t);
            }
        }
        Ok(out)
    }
}

fn vtx(name: &str) -> Term {
    Term::Var(name.to_string(), Sort::Vertex)
}

impl QfType {
    fn slot_term(&self, i: usize) -> Term {
        match &self.eq[i] {
            Slot::Param(p) => Term::Param(p.clone(), Sort::Vertex),
            Slot::New(j) => vtx(&self.vars[*j]),
        }
    }

    /// The parameter or representative variable a term denotes.
    pub fn resolve(&self, t: &Term) -> Term {
        match t {
            Term::Var(n, _) => match self.vars.iter().position(|v| v == n) {
                Some(i) => self.slot_term(i),
                None => t.clone(),
            },
            _ => t.clone(),
        }
    }

    pub fn is_realized(&self) -> bool {
        self.eq.iter().all(|s| matches!(s, Slot::Param(_)))
    }

    /// New elements, as indices of their representative variables.
    pub fn reps(&self) -> Vec<usize> {
        (0..self.vars.len()).filter(|&i| self.eq[i] == Slot::New(i)).collect()
    }

    /// Truth of an atom, or an error if the type leaves it open.
    pub fn decide(&self, frag: &Fragment, a: &Atom) -> Result<bool> {
        let a = normalize(&a.map_terms(&|t| self.resolve(t), &|l| crate::formula::LinExpr::atom(l.clone())));
        if let Atom::Eq(s, t) = &a {
            return Ok(s == t || matches!((s, t), (Term::Param(p, _), Term::Param(q, _)) if frag.vertex_of(p)? == frag.vertex_of(q)?));
        }
        if let Atom::E(s, t) = &a {
            if s == t {
                return Ok(false);
            }
        }
        if a.vars().is_empty() {
            return frag.eval_atom(&a, &Env::new());
        }
        self.rel.get(&a).copied().ok_or_else(|| Error::Precondition(format!("the type does not decide `{a}`")))
    }

    pub fn holds(&self, frag: &Fragment, f: &Formula) -> Result<bool> {
        Ok(match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => self.decide(frag, a)?,
            Formula::Not(g) => !self.holds(frag, g)?,
            Formula::And(gs) => {
                for g in gs {
                    if !self.holds(frag, g)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(gs) => {
                for g in gs {
                    if self.holds(frag, g)? {
                        return Ok(true);
                    }
                }
                false
            }
            _ => return pre("types decide quantifier-free formulas only"),
        })
    }

    /// A conjunction isolating the type (or cell) over the fragment.
    pub fn to_formula(&self, frag: &Fragment) -> Formula {
        let mut lits = Vec::new();
        let params = frag.names_of_sort(Sort::Vertex);
        for (i, v) in self.vars.iter().enumerate() {
            match &self.eq[i] {
                Slot::Param(p) => lits.push(Formula::Atom(Atom::Eq(vtx(v), Term::Param(p.clone(), Sort::Vertex)))),
                Slot::New(j) if *j != i => lits.push(Formula::Atom(Atom::Eq(vtx(v), vtx(&self.vars[*j])))),
                Slot::New(_) => {
                    for p in &params {
                        lits.push(Formula::not(Formula::Atom(Atom::Eq(vtx(v), Term::Param(p.clone(), Sort::Vertex)))));
                    }
                    for &j in self.reps().iter().filter(|&&j| j < i) {
                        lits.push(Formula::not(Formula::Atom(Atom::Eq(vtx(v), vtx(&self.vars[j])))));
                    }
                }
            }
        }
        for (a, &b) in &self.rel {
            let f = Formula::Atom(a.clone());
            lits.push(if b { f } else { Formula::not(f) });
        }
        Formula::and(lits)
    }

    /// The complete diagram over `vars` and the parameters.
    pub fn literals(&self, frag: &Fragment) -> Result<Vec<Literal>> {
        let mut terms: Vec<Term> = frag.names_of_sort(Sort::Vertex).iter().map(|p| Term::Param(p.clone(), Sort::Vertex)).collect();
        terms.extend(self.vars.iter().map(|v| vtx(v)));
        let mut atoms: Vec<Atom> = Vec::new();
        for (i, s) in terms.iter().enumerate() {
            for t in &terms[i + 1..] {
                atoms.push(Atom::Eq(s.clone(), t.clone()));
            }
        }
        atoms.extend(relational_atoms(frag.theory, &terms));
        atoms
            .into_iter()
            .map(|a| Ok(Literal { positive: self.decide(frag, &a)?, atom: a }))
            .collect()
    }

    /// Closed-world witness: new elements get exactly the positive atoms.
    pub fn realize(&self, frag: &Fragment) -> Result<Option<(Fragment, Env)>> {
        let mut out = frag.clone();
        let mut vertex: BTreeMap<usize, usize> = BTreeMap::new();
        for r in self.reps() {
            vertex.insert(r, out.new_vertex());
        }
        let value_of = |t: &Term| -> Result<usize> {
            match t {
                Term::Param(p, _) => frag.vertex_of(p),
                Term::Var(n, _) => {
                    let i = self.vars.iter().position(|v| v == n).expect("representative variable");
                    Ok(vertex[&i])
                }
                t => pre(format!("`{t}` is not a vertex term")),
            }
        };
        for (a, &b) in &self.rel {
            if !b {
                continue;
            }
            match a {
                Atom::R(s, t, u) => out.rel.add_r(value_of(s)?, value_of(t)?, value_of(u)?),
                Atom::E(s, t) => {
                    if !out.rel.add_e(value_of(s)?, value_of(t)?) {
                        return Ok(None);
                    }
                }
                a => return pre(format!("`{a}` is not relational")),
            }
        }
        if let TheoryId::Henson(s) = frag.theory {
            if out.rel.find_clique(s).is_some() {
                return Ok(None);
            }
        }
        let mut env = Env::new();
        for (i, v) in self.vars.iter().enumerate() {
            let val = match &self.eq[i] {
                Slot::Param(p) => Value::Vertex(frag.vertex_of(p)?),
                Slot::New(j) => Value::Vertex(vertex[j]),
            };
            env.insert(v.clone(), val);
        }
        Ok(Some((out, env)))
    }

    /// The type of the same elements over a smaller parameter set.
    pub fn restrict(&self, frag: &Fragment, sub: &Fragment) -> Result<QfType> {
        for (name, v) in sub.params() {
            if frag.value(name) != Some(v) {
                return pre(format!("parameter `{name}` of the subfragment is not in the fragment"));
            }
        }
        if sub.rel != restrict_rel(frag, sub)? {
            return pre("fragments are not nested");
        }
        let mut eq = Vec::new();
        for (i, s) in self.eq.iter().enumerate() {
            eq.push(match s {
                Slot::Param(p) if sub.value(p).is_some() => Slot::Param(p.clone()),
                Slot::Param(p) => {
                    let first = (0..i).find(|&j| self.eq[j] == Slot::Param(p.clone())).unwrap_or(i);
                    Slot::New(first)
                }
                Slot::New(j) => {
                    let first = (0..i).find(|&k| self.eq[k] == self.eq[*j]).unwrap_or(i);
                    Slot::New(first.min(*j))
                }
            });
        }
        let mut out = QfType { vars: self.vars.clone(), eq, rel: BTreeMap::new() };
        let mut terms: Vec<Term> = sub.names_of_sort(Sort::Vertex).iter().map(|p| Term::Param(p.clone(), Sort::Vertex)).collect();
        terms.extend(out.reps().iter().map(|&r| vtx(&self.vars[r])));
        for a in relational_atoms(frag.theory, &terms) {
            if !a.vars().is_empty() {
                let b = self.decide(frag, &a)?;
                out.rel.insert(a, b);
            }
        }
        Ok(out)
    }
}

fn restrict_rel(frag: &Fragment, sub: &Fragment) -> Result<crate::theories::relational::Relations> {
    let keep: BTreeSet<usize> = sub.params().filter_map(|(_, v)| if let Value::Vertex(v) = v { Some(*v) } else { None }).collect();
    let mut r = frag.rel.clone();
    r.r.retain(|t| t.iter().all(|v| keep.contains(v)));
    r.e.retain(|(a, b)| keep.contains(a) && keep.contains(b));
    Ok(r)
}

/// Canonical orientation of relational atoms.
pub fn normalize(a: &Atom) -> Atom {
    match a {
        Atom::E(s, t) if t < s => Atom::E(t.clone(), s.clone()),
        Atom::Eq(s, t) if t < s => Atom::Eq(t.clone(), s.clone()),
        a => a.clone(),
    }
}

/// All relation atoms of the theory over the given terms.
pub fn relational_atoms(theory: TheoryId, terms: &[Term]) -> Vec<Atom> {
    let mut out = Vec::new();
    match theory {
        TheoryId::TR => {
            for a in terms {
                for b in terms {
                    for c in terms {
                        out.push(Atom::R(a.clone(), b.clone(), c.clone()));
                    }
                }
            }
        }
        t if t.is_graph() => {
            for (i, a) in terms.iter().enumerate() {
                for b in &terms[i + 1..] {
                    out.push(normalize(&Atom::E(a.clone(), b.clone())));
                }
            }
        }
        _ => {}
    }
    out
}

fn equality_patterns(params: &[String], n: usize) -> Vec<Vec<Slot>> {
    let mut out = vec![Vec::new()];
    for i in 0..n {
        let mut next = Vec::new();
        for pat in &out {
            for p in params {
                let mut q = pat.clone();
                q.push(Slot::Param(p.clone()));
                next.push(q);
            }
            for j in (0..i).filter(|&j| pat[j] == Slot::New(j)) {
                let mut q = pat.clone();
                q.push(Slot::New(j));
                next.push(q);
            }
            let mut q = pat.clone();
            q.push(Slot::New(i));
            next.push(q);
        }
        out = next;
    }
    out
}

fn check_relational(frag: &Fragment) -> Result<()> {
    if !frag.theory.is_relational() {
        return unsupported(format!(
            "{} has no finite type spaces; evaluate measures symbolically instead",
            frag.theory
        ));
    }
    Ok(())
}

fn enumerate_with(
    frag: &Fragment,
    vars: &[String],
    cap: u64,
    atoms_for: &dyn Fn(&QfType) -> Vec<Atom>,
) -> Result<Vec<QfType>> {
    check_relational(frag)?;
    let params = frag.names_of_sort(Sort::Vertex);
    let mut out = Vec::new();
    for eq in equality_patterns(&params, vars.len()) {
        let base = QfType { vars: vars.to_vec(), eq, rel: BTreeMap::new() };
        let atoms = atoms_for(&base);
        if atoms.len() >= 63 || 1u64 << atoms.len() > cap {
            return Err(Error::Limit(format!("2^{} candidate diagrams exceed the type-space cap {cap}", atoms.len())));
        }
        for mask in 0..1u64 << atoms.len() {
            let mut t = base.clone();
            for (k, a) in atoms.iter().enumerate() {
                t.rel.insert(a.clone(), mask >> k & 1 == 1);
            }
            if frag.theory.is_graph() && matches!(frag.theory, TheoryId::Henson(_)) && t.realize(frag)?.is_none() {
                continue;
            }
            out.push(t);
        }
    }
    Ok(out)
}

fn new_atoms(frag: &Fragment, t: &QfType) -> Vec<Atom> {
    let mut terms: Vec<Term> = frag.names_of_sort(Sort::Vertex).iter().map(|p| Term::Param(p.clone(), Sort::Vertex)).collect();
    terms.extend(t.reps().iter().map(|&r| vtx(&t.vars[r])));
    relational_atoms(frag.theory, &terms).into_iter().filter(|a| !a.vars().is_empty()).collect()
}

/// Every complete quantifier-free type of `vars` over the fragment.
pub fn enumerate_types(frag: &Fragment, vars: &[String]) -> Result<TypeSpace> {
    enumerate_types_capped(frag, vars, DEFAULT_TYPE_CAP)
}

pub fn enumerate_types_capped(frag: &Fragment, vars: &[String], cap: u64) -> Result<TypeSpace> {
    let types = enumerate_with(frag, vars, cap, &|t| new_atoms(frag, t))?;
    Ok(TypeSpace { fragment: frag.clone(), vars: vars.to_vec(), types })
}

/// Cells deciding the equality pattern plus the given atoms (after
/// resolving equalities); a partition of the type space.
pub fn enumerate_cells(frag: &Fragment, vars: &[String], atoms: &[Atom], cap: u64) -> Result<Vec<QfType>> {
    enumerate_with(frag, vars, cap, &|t| {
        let mut set = BTreeSet::new();
        for a in atoms {
            if !matches!(a, Atom::R(..) | Atom::E(..)) {
                continue;
            }
            let r = normalize(&a.map_terms(&|s| t.resolve(s), &|l| crate::formula::LinExpr::atom(l.clone())));
            if r.vars().is_empty() || r.vars().iter().any(|v| !vars.contains(v)) {
                continue;
            }
            if let Atom::E(s, u) = &r {
                if s == u {
                    continue;
                }
            }
            set.insert(r);
        }
        set.into_iter().collect()
    })
}

/// Variables as a list of names, from a comma-separated string.
pub fn var_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|v| !v.is_empty()).map(String::from).collect()
}
