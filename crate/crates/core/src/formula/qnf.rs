//! Formal join-of-meets normal forms for Q-terms.

use super::ast::Term;
use crate::error::{Error, Result};

pub const MAX_NORMAL_FORM_VARS: usize = 4;

/// Minterm `j` over `vars`: generator `i` appears positively iff bit `i` of `j` is 0.
pub fn minterm(vars: &[Term], j: usize) -> Term {
    let mut acc: Option<Term> = None;
    for (i, v) in vars.iter().enumerate() {
        let lit = if j >> i & 1 == 0 { v.clone() } else { Term::comp(v.clone()) };
        acc = Some(match acc {
            None => lit,
            Some(a) => Term::meet(a, lit),
        });
    }
    acc.unwrap_or(Term::Top)
}

/// Term for a set of minterms given as a bitmask.
pub fn mask_term(vars: &[Term], mask: u64) -> Term {
    let n = 1usize << vars.len();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    if mask == 0 {
        return Term::Bot;
    }
    if mask & full == full {
        return Term::Top;
    }
    let mut acc: Option<Term> = None;
    for j in 0..n {
        if mask >> j & 1 == 1 {
            let m = minterm(vars, j);
            acc = Some(match acc {
                None => m,
                Some(a) => Term::join(a, m),
            });
        }
    }
    acc.unwrap()
}

/// Every join of minterms over `vars`, ordered by bitmask.
pub fn q_term_normal_forms(vars: &[Term]) -> Result<Vec<Term>> {
    if vars.is_empty() {
        return Err(Error::Precondition("q_term_normal_forms needs at least one variable".into()));
    }
    if vars.len() > MAX_NORMAL_FORM_VARS {
        return Err(Error::Limit(format!(
            "{} generators exceed the normal-form bound {MAX_NORMAL_FORM_VARS}",
            vars.len()
        )));
    }
    let count = 1u64 << (1u64 << vars.len());
    Ok((0..count).map(|m| mask_term(vars, m)).collect())
}

/// Minterm bitmask of a term built from `vars`, `bot`, `top` and lattice operations.
pub fn normal_form_mask(t: &Term, vars: &[Term]) -> Option<u64> {
    let n = 1usize << vars.len();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    match t {
        Term::Bot => Some(0),
        Term::Top => Some(full),
        Term::Meet(a, b) => Some(normal_form_mask(a, vars)? & normal_form_mask(b, vars)?),
        Term::Join(a, b) => Some(normal_form_mask(a, vars)? | normal_form_mask(b, vars)?),
        Term::Comp(a) => Some(!normal_form_mask(a, vars)? & full),
        leaf => {
            let i = vars.iter().position(|v| v == leaf)?;
            Some((0..n).filter(|j| j >> i & 1 == 0).fold(0u64, |m, j| m | 1 << j))
        }
    }
}
