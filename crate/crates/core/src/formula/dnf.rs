use std::collections::BTreeSet;

use super::ast::{Atom, Formula};
use crate::error::{Error, Result};

pub const DEFAULT_LITERAL_CAP: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Literal {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Literal {
        Literal { atom, positive: false }
    }

    pub fn negate(&self) -> Literal {
        Literal { atom: self.atom.clone(), positive: !self.positive }
    }

    pub fn to_formula(&self) -> Formula {
        let a = Formula::Atom(self.atom.clone());
        if self.positive {
            a
        } else {
            Formula::not(a)
        }
    }
}

/// A disjunction of literal conjunctions. No disjuncts means false;
/// an empty conjunction means true.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dnf {
    pub disjuncts: Vec<Vec<Literal>>,
}

impl Dnf {
    pub fn is_false(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn is_true(&self) -> bool {
        self.disjuncts.iter().any(Vec::is_empty)
    }

    pub fn to_formula(&self) -> Formula {
        Formula::or(
            self.disjuncts
                .iter()
                .map(|c| Formula::and(c.iter().map(Literal::to_formula).collect()))
                .collect(),
        )
    }
}

pub fn to_dnf(f: &Formula) -> Result<Dnf> {
    to_dnf_capped(f, DEFAULT_LITERAL_CAP)
}

pub fn to_dnf_capped(f: &Formula, cap: usize) -> Result<Dnf> {
    if !f.is_qf() {
        return Err(Error::Precondition("to_dnf needs a quantifier-free formula".into()));
    }
    if f.size() > cap {
        return Err(Error::Limit(format!("{} literal occurrences exceed the DNF cap {cap}", f.size())));
    }
    let raw = nnf_dnf(f, true);
    Ok(Dnf { disjuncts: tidy(raw) })
}

fn nnf_dnf(f: &Formula, pos: bool) -> Vec<Vec<Literal>> {
    match (f, pos) {
        (Formula::True, true) | (Formula::False, false) => vec![vec![]],
        (Formula::True, false) | (Formula::False, true) => vec![],
        (Formula::Atom(a), p) => vec![vec![Literal { atom: a.clone(), positive: p }]],
        (Formula::Not(g), p) => nnf_dnf(g, !p),
        (Formula::And(gs), true) | (Formula::Or(gs), false) => {
            let mut acc: Vec<Vec<Literal>> = vec![vec![]];
            for g in gs {
                let part = nnf_dnf(g, pos);
                let mut next = Vec::with_capacity(acc.len() * part.len());
                for a in &acc {
                    for b in &part {
                        let mut c = a.clone();
                        c.extend(b.iter().cloned());
                        if let Some(c) = normalize_conj(c) {
                            next.push(c);
                        }
                    }
                }
                acc = next;
                if acc.is_empty() {
                    break;
                }
            }
            acc
        }
        (Formula::Or(gs), true) | (Formula::And(gs), false) => {
            gs.iter().flat_map(|g| nnf_dnf(g, pos)).collect()
        }
        (Formula::Exists(..) | Formula::Forall(..), _) => unreachable!("checked quantifier-free"),
    }
}

/// Sorts and dedupes a conjunction; `None` if it contains complementary literals.
pub fn normalize_conj(mut c: Vec<Literal>) -> Option<Vec<Literal>> {
    c.sort();
    c.dedup();
    for w in c.windows(2) {
        if w[0].atom == w[1].atom {
            return None;
        }
    }
    Some(c)
}

fn tidy(raw: Vec<Vec<Literal>>) -> Vec<Vec<Literal>> {
    let mut ds: Vec<Vec<Literal>> = raw.into_iter().filter_map(normalize_conj).collect();
    ds.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    ds.dedup();
    let mut kept: Vec<Vec<Literal>> = Vec::new();
    for d in ds {
        let set: BTreeSet<&Literal> = d.iter().collect();
        if !kept.iter().any(|k| k.iter().all(|l| set.contains(l))) {
            kept.push(d);
        }
    }
    kept.sort();
    kept
}
