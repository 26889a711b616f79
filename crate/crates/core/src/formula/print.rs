use std::fmt::{self, Display, Formatter};

use num_traits::{One, Signed, Zero};

use super::ast::{Atom, CmpOp, Formula, LinAtom, LinExpr, Term};
use crate::scalar::fmt_rat;

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(n, _) | Term::Param(n, _) => f.write_str(n),
            Term::Bot => f.write_str("bot"),
            Term::Top => f.write_str("top"),
            Term::Meet(a, b) => write!(f, "({a} meet {b})"),
            Term::Join(a, b) => write!(f, "({a} join {b})"),
            Term::Comp(a) => write!(f, "{a}^c"),
        }
    }
}

fn bare(t: &Term) -> String {
    match t {
        Term::Meet(a, b) => format!("{a} meet {b}"),
        Term::Join(a, b) => format!("{a} join {b}"),
        t => t.to_string(),
    }
}

impl Display for LinAtom {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            LinAtom::Ell(t) => write!(f, "l({})", bare(t)),
            LinAtom::Var(n) | LinAtom::Param(n) => f.write_str(n),
        }
    }
}

impl Display for LinExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let sign = |f: &mut Formatter<'_>, neg: bool, first: &mut bool| -> fmt::Result {
            let s = match (*first, neg) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            *first = false;
            f.write_str(s)
        };
        for (a, c) in &self.terms {
            sign(f, c.is_negative(), &mut first)?;
            let m = c.abs();
            if m.is_one() {
                write!(f, "{a}")?;
            } else {
                write!(f, "{}*{a}", fmt_rat(&m))?;
            }
        }
        if !self.constant.is_zero() || first {
            sign(f, self.constant.is_negative(), &mut first)?;
            f.write_str(&fmt_rat(&self.constant.abs()))?;
        }
        Ok(())
    }
}

impl Display for Atom {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Sqin(a, b) => write!(f, "{a} sqin {b}"),
            Atom::Eq(a, b) => write!(f, "{a} = {b}"),
            Atom::Sim(a, b) => write!(f, "{a} sim {b}"),
            Atom::R(a, b, c) => write!(f, "R({a},{b},{c})"),
            Atom::E(a, b) => write!(f, "E({a},{b})"),
            Atom::Cmp(CmpOp::Eq, l, r) => write!(f, "{l} = {r}"),
            Atom::Cmp(CmpOp::Lt, l, r) => write!(f, "{l} < {r}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ctx {
    Top,
    OrArg,
    AndArg,
    NotArg,
}

fn write_formula(f: &mut Formatter<'_>, phi: &Formula, ctx: Ctx) -> fmt::Result {
    match phi {
        Formula::True => f.write_str("true"),
        Formula::False => f.write_str("false"),
        Formula::Atom(a @ (Atom::R(..) | Atom::E(..))) => write!(f, "{a}"),
        Formula::Atom(a) if ctx == Ctx::NotArg => write!(f, "({a})"),
        Formula::Atom(a) => write!(f, "{a}"),
        Formula::Not(g) => match g.as_ref() {
            Formula::Atom(Atom::Eq(a, b)) => wrap(f, ctx == Ctx::NotArg, |f| write!(f, "{a} != {b}")),
            Formula::Atom(Atom::Cmp(CmpOp::Eq, l, r)) => {
                wrap(f, ctx == Ctx::NotArg, |f| write!(f, "{l} != {r}"))
            }
            g => {
                f.write_str("!")?;
                write_formula(f, g, Ctx::NotArg)
            }
        },
        Formula::And(gs) => wrap(f, ctx >= Ctx::AndArg, |f| {
            for (i, g) in gs.iter().enumerate() {
                if i > 0 {
                    f.write_str(" & ")?;
                }
                write_formula(f, g, Ctx::AndArg)?;
            }
            Ok(())
        }),
        Formula::Or(gs) => wrap(f, ctx >= Ctx::OrArg, |f| {
            for (i, g) in gs.iter().enumerate() {
                if i > 0 {
                    f.write_str(" | ")?;
                }
                write_formula(f, g, Ctx::OrArg)?;
            }
            Ok(())
        }),
        Formula::Exists(v, g) | Formula::Forall(v, g) => {
            let q = if matches!(phi, Formula::Exists(..)) { "exists" } else { "forall" };
            wrap(f, ctx != Ctx::Top, |f| {
                write!(f, "{q} {}. ", v.name)?;
                write_formula(f, g, Ctx::Top)
            })
        }
    }
}

fn wrap(
    f: &mut Formatter<'_>,
    parens: bool,
    body: impl FnOnce(&mut Formatter<'_>) -> fmt::Result,
) -> fmt::Result {
    if parens {
        f.write_str("(")?;
    }
    body(f)?;
    if parens {
        f.write_str(")")?;
    }
    Ok(())
}

impl Display for Formula {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_formula(f, self, Ctx::Top)
    }
}
