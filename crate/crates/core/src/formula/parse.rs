//! Recursive-descent parser with sort inference.

use std::collections::{BTreeMap, BTreeSet};

use num::bigint::BigInt;
use num_traits::{One, Zero};

use super::ast::{is_var_name, Atom, CmpOp, Formula, LinAtom, LinExpr, Sort, Term, Var};
use crate::error::{Error, Result};
use crate::Rational;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(Rational),
    Sym(&'static str),
    PostComp,
}

const KEYWORDS: &[&str] =
    &["sqin", "sim", "meet", "join", "comp", "bot", "top", "l", "exists", "forall", "true", "false"];

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let b = src.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let n: BigInt = src[start..i].parse().unwrap();
            let mut d = BigInt::one();
            if i + 1 < b.len() && b[i] == b'/' && b[i + 1].is_ascii_digit() {
                let s = i + 1;
                i += 1;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                d = src[s..i].parse().unwrap();
                if d.is_zero() {
                    return Err(Error::Parse { pos: start, msg: "zero denominator".into() });
                }
            }
            out.push((Tok::Num(Rational::new(n, d)), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        let two = if i + 1 < b.len() { &src[i..i + 2] } else { "" };
        if two == "!=" {
            out.push((Tok::Sym("!="), start));
            i += 2;
            continue;
        }
        if two == "^c" {
            out.push((Tok::PostComp, start));
            i += 2;
            continue;
        }
        let sym = match c {
            '(' => "(",
            ')' => ")",
            ',' => ",",
            '.' => ".",
            '&' => "&",
            '|' => "|",
            '!' => "!",
            '=' => "=",
            '<' => "<",
            '>' => ">",
            '+' => "+",
            '-' => "-",
            '*' => "*",
            _ => return Err(Error::Parse { pos: start, msg: format!("unexpected character `{c}`") }),
        };
        out.push((Tok::Sym(sym), start));
        i += 1;
    }
    Ok(out)
}

/// Untyped expression produced before sort inference.
#[derive(Debug, Clone)]
enum Raw {
    Ident(String),
    Num(Rational),
    Bot,
    Top,
    Meet(Box<Raw>, Box<Raw>),
    Join(Box<Raw>, Box<Raw>),
    Comp(Box<Raw>),
    Ell(Box<Raw>),
    Sum(Vec<(Rational, Raw)>),
}

#[derive(Debug, Clone)]
enum RawRel {
    Sqin,
    Sim,
    Eq,
    Ne,
    Lt,
    Gt,
}

#[derive(Debug, Clone)]
enum RawF {
    True,
    False,
    Rel(RawRel, Raw, Raw, usize),
    Pred(char, Vec<Raw>, usize),
    Not(Box<RawF>),
    And(Vec<RawF>),
    Or(Vec<RawF>),
    Quant(bool, String, Box<RawF>),
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.here(), msg: msg.into() })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(t)) if *t == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(t)) if t == s)
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.is_sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn formula(&mut self) -> Result<RawF> {
        if self.is_kw("exists") || self.is_kw("forall") {
            let ex = self.is_kw("exists");
            self.pos += 1;
            let name = match self.peek() {
                Some(Tok::Ident(n)) if !KEYWORDS.contains(&n.as_str()) => n.clone(),
                _ => return self.err("expected bound variable"),
            };
            self.pos += 1;
            self.expect_sym(".")?;
            let body = self.formula()?;
            return Ok(RawF::Quant(ex, name, Box::new(body)));
        }
        let mut parts = vec![self.conj()?];
        while self.is_sym("|") {
            self.pos += 1;
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { RawF::Or(parts) })
    }

    fn conj(&mut self) -> Result<RawF> {
        let mut parts = vec![self.unary()?];
        while self.is_sym("&") {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { RawF::And(parts) })
    }

    fn unary(&mut self) -> Result<RawF> {
        if self.is_sym("!") {
            self.pos += 1;
            return Ok(RawF::Not(Box::new(self.unary()?)));
        }
        if self.is_kw("exists") || self.is_kw("forall") {
            return self.formula();
        }
        if self.is_kw("true") {
            self.pos += 1;
            return Ok(RawF::True);
        }
        if self.is_kw("false") {
            self.pos += 1;
            return Ok(RawF::False);
        }
        if let Some(Tok::Ident(n)) = self.peek() {
            if (n == "R" || n == "E") && matches!(self.toks.get(self.pos + 1), Some((Tok::Sym("("), _))) {
                let kind = n.chars().next().unwrap();
                let at = self.here();
                self.pos += 2;
                let mut args = vec![self.expr()?];
                while self.is_sym(",") {
                    self.pos += 1;
                    args.push(self.expr()?);
                }
                self.expect_sym(")")?;
                let want = if kind == 'R' { 3 } else { 2 };
                if args.len() != want {
                    return Err(Error::Parse { pos: at, msg: format!("{kind} takes {want} arguments") });
                }
                return Ok(RawF::Pred(kind, args, at));
            }
        }
        if self.is_sym("(") {
            let save = self.pos;
            if let Ok(a) = self.relation() {
                return Ok(a);
            }
            self.pos = save + 1;
            let f = self.formula()?;
            self.expect_sym(")")?;
            return Ok(f);
        }
        self.relation()
    }

    fn relation(&mut self) -> Result<RawF> {
        let at = self.here();
        let lhs = self.expr()?;
        let rel = match self.peek() {
            Some(Tok::Ident(k)) if k == "sqin" => RawRel::Sqin,
            Some(Tok::Ident(k)) if k == "sim" => RawRel::Sim,
            Some(Tok::Sym("=")) => RawRel::Eq,
            Some(Tok::Sym("!=")) => RawRel::Ne,
            Some(Tok::Sym("<")) => RawRel::Lt,
            Some(Tok::Sym(">")) => RawRel::Gt,
            _ => return self.err("expected relation"),
        };
        self.pos += 1;
        let rhs = self.expr()?;
        Ok(RawF::Rel(rel, lhs, rhs, at))
    }

    fn expr(&mut self) -> Result<Raw> {
        let mut items = Vec::new();
        let mut sign = Rational::one();
        if self.is_sym("-") {
            self.pos += 1;
            sign = -sign;
        }
        loop {
            let (c, r) = self.product()?;
            items.push((c * &sign, r));
            if self.is_sym("+") {
                sign = Rational::one();
            } else if self.is_sym("-") {
                sign = -Rational::one();
            } else {
                break;
            }
            self.pos += 1;
        }
        if items.len() == 1 && items[0].0.is_one() {
            return Ok(items.pop().unwrap().1);
        }
        Ok(Raw::Sum(items))
    }

    fn product(&mut self) -> Result<(Rational, Raw)> {
        if let Some(Tok::Num(n)) = self.peek() {
            let n = n.clone();
            self.pos += 1;
            if self.is_sym("*") {
                self.pos += 1;
                return Ok((n, self.lattice()?));
            }
            return Ok((Rational::one(), Raw::Num(n)));
        }
        Ok((Rational::one(), self.lattice()?))
    }

    fn lattice(&mut self) -> Result<Raw> {
        let mut acc = self.meet()?;
        while self.is_kw("join") {
            self.pos += 1;
            acc = Raw::Join(Box::new(acc), Box::new(self.meet()?));
        }
        Ok(acc)
    }

    fn meet(&mut self) -> Result<Raw> {
        let mut acc = self.postfix()?;
        while self.is_kw("meet") {
            self.pos += 1;
            acc = Raw::Meet(Box::new(acc), Box::new(self.postfix()?));
        }
        Ok(acc)
    }

    fn postfix(&mut self) -> Result<Raw> {
        let mut acc = self.primary()?;
        while self.peek() == Some(&Tok::PostComp) {
            self.pos += 1;
            acc = Raw::Comp(Box::new(acc));
        }
        Ok(acc)
    }

    fn primary(&mut self) -> Result<Raw> {
        match self.peek().cloned() {
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Raw::Num(n))
            }
            Some(Tok::Ident(k)) => match k.as_str() {
                "bot" => {
                    self.pos += 1;
                    Ok(Raw::Bot)
                }
                "top" => {
                    self.pos += 1;
                    Ok(Raw::Top)
                }
                "comp" | "l" => {
                    self.pos += 1;
                    self.expect_sym("(")?;
                    let e = self.expr()?;
                    self.expect_sym(")")?;
                    Ok(if k == "comp" { Raw::Comp(Box::new(e)) } else { Raw::Ell(Box::new(e)) })
                }
                _ if KEYWORDS.contains(&k.as_str()) || k == "R" || k == "E" => {
                    self.err(format!("unexpected keyword `{k}`"))
                }
                _ => {
                    self.pos += 1;
                    Ok(Raw::Ident(k))
                }
            },
            _ => self.err("expected term"),
        }
    }
}

/// Options steering sort inference.
#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Known sorts of identifiers (usually fragment parameters).
    pub sorts: BTreeMap<String, Sort>,
    /// Sort for identifiers only constrained by bare equalities.
    pub default_sort: Sort,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { sorts: BTreeMap::new(), default_sort: Sort::Vertex }
    }
}

pub fn parse(text: &str) -> Result<Formula> {
    parse_with(text, &ParseOptions::default())
}

pub fn parse_with(text: &str, opts: &ParseOptions) -> Result<Formula> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let raw = p.formula()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    let mut inf = Infer::new(opts);
    inf.formula(&raw, text)?;
    let sorts = inf.resolve()?;
    let mut b = Build { sorts, bound: Vec::new(), src: text };
    b.formula(&raw)
}

/// Parses a standalone Q-sort term.
pub fn parse_term(text: &str) -> Result<Term> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let raw = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    let mut names = BTreeSet::new();
    idents(&raw, &mut names);
    let sorts = names.into_iter().map(|n| (n, Sort::Q)).collect();
    let b = Build { sorts, bound: Vec::new(), src: text };
    b.term(&raw, 0)
}

fn idents(r: &Raw, out: &mut BTreeSet<String>) {
    match r {
        Raw::Ident(n) => {
            out.insert(n.clone());
        }
        Raw::Meet(a, b) | Raw::Join(a, b) => {
            idents(a, out);
            idents(b, out);
        }
        Raw::Comp(a) | Raw::Ell(a) => idents(a, out),
        Raw::Sum(items) => items.iter().for_each(|(_, r)| idents(r, out)),
        _ => {}
    }
}

#[derive(PartialEq)]
enum Shape {
    Bare,
    Lattice,
    Arith,
}

fn shape(r: &Raw) -> Shape {
    match r {
        Raw::Ident(_) => Shape::Bare,
        Raw::Num(_) | Raw::Ell(_) | Raw::Sum(_) => Shape::Arith,
        _ => Shape::Lattice,
    }
}

struct Infer {
    fixed: BTreeMap<String, Sort>,
    parent: BTreeMap<String, String>,
    default_sort: Sort,
}

impl Infer {
    fn new(opts: &ParseOptions) -> Infer {
        Infer { fixed: opts.sorts.clone(), parent: BTreeMap::new(), default_sort: opts.default_sort }
    }

    fn find(&mut self, n: &str) -> String {
        let p = self.parent.get(n).cloned().unwrap_or_else(|| n.to_string());
        if p == n {
            return p;
        }
        let root = self.find(&p);
        self.parent.insert(n.to_string(), root.clone());
        root
    }

    fn touch(&mut self, n: &str) {
        self.parent.entry(n.to_string()).or_insert_with(|| n.to_string());
    }

    fn set(&mut self, n: &str, s: Sort, src: &str, at: usize) -> Result<()> {
        self.touch(n);
        match self.fixed.get(n) {
            Some(old) if *old != s => Err(Error::Sort {
                atom: snippet(src, at),
                msg: format!("`{n}` used as {s} but has sort {old}"),
            }),
            _ => {
                self.fixed.insert(n.to_string(), s);
                Ok(())
            }
        }
    }

    fn lattice_ctx(&mut self, r: &Raw, src: &str, at: usize) -> Result<()> {
        match r {
            Raw::Ident(n) => self.set(n, Sort::Q, src, at),
            Raw::Bot | Raw::Top => Ok(()),
            Raw::Meet(a, b) | Raw::Join(a, b) => {
                self.lattice_ctx(a, src, at)?;
                self.lattice_ctx(b, src, at)
            }
            Raw::Comp(a) => self.lattice_ctx(a, src, at),
            _ => Err(Error::Sort { atom: snippet(src, at), msg: "arithmetic inside a Q-term".into() }),
        }
    }

    fn arith_ctx(&mut self, r: &Raw, src: &str, at: usize) -> Result<()> {
        match r {
            Raw::Ident(n) => self.set(n, Sort::R, src, at),
            Raw::Num(_) => Ok(()),
            Raw::Ell(t) => self.lattice_ctx(t, src, at),
            Raw::Sum(items) => items.iter().try_for_each(|(_, r)| self.arith_ctx(r, src, at)),
            _ => Err(Error::Sort { atom: snippet(src, at), msg: "Q-term used as a real".into() }),
        }
    }

    fn formula(&mut self, f: &RawF, src: &str) -> Result<()> {
        match f {
            RawF::True | RawF::False => Ok(()),
            RawF::Not(g) => self.formula(g, src),
            RawF::And(gs) | RawF::Or(gs) => gs.iter().try_for_each(|g| self.formula(g, src)),
            RawF::Quant(_, n, g) => {
                self.touch(n);
                self.formula(g, src)
            }
            RawF::Pred(_, args, at) => args.iter().try_for_each(|a| match a {
                Raw::Ident(n) => self.set(n, Sort::Vertex, src, *at),
                _ => Err(Error::Sort { atom: snippet(src, *at), msg: "relation arguments must be names".into() }),
            }),
            RawF::Rel(rel, l, r, at) => match rel {
                RawRel::Sqin => {
                    match l {
                        Raw::Ident(n) => self.set(n, Sort::P, src, *at)?,
                        _ => {
                            return Err(Error::Sort {
                                atom: snippet(src, *at),
                                msg: "left of sqin must be a P-name".into(),
                            })
                        }
                    }
                    self.lattice_ctx(r, src, *at)
                }
                RawRel::Sim => {
                    self.lattice_ctx(l, src, *at)?;
                    self.lattice_ctx(r, src, *at)
                }
                RawRel::Lt | RawRel::Gt => {
                    self.arith_ctx(l, src, *at)?;
                    self.arith_ctx(r, src, *at)
                }
                RawRel::Eq | RawRel::Ne => {
                    let (sl, sr) = (shape(l), shape(r));
                    if sl == Shape::Arith || sr == Shape::Arith {
                        self.arith_ctx(l, src, *at)?;
                        self.arith_ctx(r, src, *at)
                    } else if sl == Shape::Lattice || sr == Shape::Lattice {
                        self.lattice_ctx(l, src, *at)?;
                        self.lattice_ctx(r, src, *at)
                    } else if let (Raw::Ident(a), Raw::Ident(b)) = (l, r) {
                        self.touch(a);
                        self.touch(b);
                        let (ra, rb) = (self.find(a), self.find(b));
                        if ra != rb {
                            self.parent.insert(ra, rb);
                        }
                        Ok(())
                    } else {
                        Ok(())
                    }
                }
            },
        }
    }

    fn resolve(mut self) -> Result<BTreeMap<String, Sort>> {
        let names: Vec<String> = self.parent.keys().cloned().collect();
        let mut class_sort: BTreeMap<String, Sort> = BTreeMap::new();
        for n in &names {
            let root = self.find(n);
            if let Some(s) = self.fixed.get(n).copied() {
                match class_sort.get(&root) {
                    Some(old) if *old != s => {
                        return Err(Error::Sort {
                            atom: n.clone(),
                            msg: format!("equated with a {old} but has sort {s}"),
                        })
                    }
                    _ => {
                        class_sort.insert(root, s);
                    }
                }
            }
        }
        let mut out = BTreeMap::new();
        for n in names {
            let root = self.find(&n);
            out.insert(n, class_sort.get(&root).copied().unwrap_or(self.default_sort));
        }
        Ok(out)
    }
}

fn snippet(src: &str, at: usize) -> String {
    src[at.min(src.len())..].chars().take(24).collect()
}

struct Build<'a> {
    sorts: BTreeMap<String, Sort>,
    bound: Vec<String>,
    src: &'a str,
}

impl Build<'_> {
    fn is_var(&self, n: &str) -> bool {
        self.bound.iter().any(|b| b == n) || is_var_name(n)
    }

    fn name_term(&self, n: &str) -> Term {
        let s = self.sorts[n];
        if self.is_var(n) {
            Term::Var(n.to_string(), s)
        } else {
            Term::Param(n.to_string(), s)
        }
    }

    fn term(&self, r: &Raw, at: usize) -> Result<Term> {
        Ok(match r {
            Raw::Ident(n) => self.name_term(n),
            Raw::Bot => Term::Bot,
            Raw::Top => Term::Top,
            Raw::Meet(a, b) => Term::meet(self.term(a, at)?, self.term(b, at)?),
            Raw::Join(a, b) => Term::join(self.term(a, at)?, self.term(b, at)?),
            Raw::Comp(a) => Term::comp(self.term(a, at)?),
            _ => {
                return Err(Error::Sort { atom: snippet(self.src, at), msg: "expected a term".into() })
            }
        })
    }

    fn lin(&self, r: &Raw, at: usize) -> Result<LinExpr> {
        Ok(match r {
            Raw::Ident(n) => LinExpr::atom(if self.is_var(n) {
                LinAtom::Var(n.clone())
            } else {
                LinAtom::Param(n.clone())
            }),
            Raw::Num(c) => LinExpr::constant(c.clone()),
            Raw::Ell(t) => LinExpr::atom(LinAtom::Ell(self.term(t, at)?)),
            Raw::Sum(items) => {
                let mut acc = LinExpr::zero();
                for (c, r) in items {
                    acc = acc.add(&self.lin(r, at)?.scale(c));
                }
                acc
            }
            _ => {
                return Err(Error::Sort { atom: snippet(self.src, at), msg: "expected a real term".into() })
            }
        })
    }

    fn formula(&mut self, f: &RawF) -> Result<Formula> {
        Ok(match f {
            RawF::True => Formula::True,
            RawF::False => Formula::False,
            RawF::Not(g) => Formula::Not(Box::new(self.formula(g)?)),
            RawF::And(gs) => Formula::And(gs.iter().map(|g| self.formula(g)).collect::<Result<_>>()?),
            RawF::Or(gs) => Formula::Or(gs.iter().map(|g| self.formula(g)).collect::<Result<_>>()?),
            RawF::Quant(ex, n, g) => {
                self.bound.push(n.clone());
                let body = self.formula(g)?;
                self.bound.pop();
                let v = Var { name: n.clone(), sort: self.sorts[n] };
                if *ex {
                    Formula::Exists(v, Box::new(body))
                } else {
                    Formula::Forall(v, Box::new(body))
                }
            }
            RawF::Pred(k, args, at) => {
                let ts = args.iter().map(|a| self.term(a, *at)).collect::<Result<Vec<_>>>()?;
                let mut it = ts.into_iter();
                let a = it.next().unwrap();
                let b = it.next().unwrap();
                if *k == 'R' {
                    Formula::Atom(Atom::R(a, b, it.next().unwrap()))
                } else {
                    Formula::Atom(Atom::E(a, b))
                }
            }
            RawF::Rel(rel, l, r, at) => {
                let at = *at;
                let real = match rel {
                    RawRel::Lt | RawRel::Gt => true,
                    RawRel::Eq | RawRel::Ne => {
                        shape(l) == Shape::Arith
                            || shape(r) == Shape::Arith
                            || matches!(l, Raw::Ident(n) if self.sorts[n] == Sort::R)
                    }
                    _ => false,
                };
                let atom = match rel {
                    RawRel::Sqin => Atom::Sqin(self.term(l, at)?, self.term(r, at)?),
                    RawRel::Sim => Atom::Sim(self.term(l, at)?, self.term(r, at)?),
                    RawRel::Lt => Atom::Cmp(CmpOp::Lt, self.lin(l, at)?, self.lin(r, at)?),
                    RawRel::Gt => Atom::Cmp(CmpOp::Lt, self.lin(r, at)?, self.lin(l, at)?),
                    RawRel::Eq | RawRel::Ne if real => {
                        Atom::Cmp(CmpOp::Eq, self.lin(l, at)?, self.lin(r, at)?)
                    }
                    RawRel::Eq | RawRel::Ne => {
                        let (a, b) = (self.term(l, at)?, self.term(r, at)?);
                        if a.sort() != b.sort() {
                            return Err(Error::Sort {
                                atom: snippet(self.src, at),
                                msg: format!("equality between {} and {}", a.sort(), b.sort()),
                            });
                        }
                        Atom::Eq(a, b)
                    }
                };
                if matches!(rel, RawRel::Ne) {
                    Formula::Not(Box::new(Formula::Atom(atom)))
                } else {
                    Formula::Atom(atom)
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;

    #[test]
    fn membership_atom() {
        let f = parse("x sqin y").unwrap();
        assert_eq!(f, Formula::Atom(Atom::Sqin(Term::var("x", Sort::P), Term::var("y", Sort::Q))));
    }

    #[test]
    fn lattice_term() {
        let f = parse("x sqin (y1 meet y2^c)").unwrap();
        let t = Term::meet(Term::var("y1", Sort::Q), Term::comp(Term::var("y2", Sort::Q)));
        assert_eq!(f, Formula::Atom(Atom::Sqin(Term::var("x", Sort::P), t)));
    }

    #[test]
    fn existential_linear() {
        let f = parse("exists z0. z0 + z0 = l(y)").unwrap();
        let mut lhs = LinExpr::zero();
        lhs.add_term(LinAtom::Var("z0".into()), int(2));
        let rhs = LinExpr::atom(LinAtom::Ell(Term::var("y", Sort::Q)));
        let want = Formula::exists("z0", Sort::R, Formula::Atom(Atom::Cmp(CmpOp::Eq, lhs, rhs)));
        assert_eq!(f, want);
    }

    #[test]
    fn bound_names_are_variables() {
        let f = parse("exists m. 2*m = u").unwrap();
        assert_eq!(f.free_vars().len(), 0);
        assert_eq!(f.params().keys().cloned().collect::<Vec<_>>(), vec!["u".to_string()]);
    }

    #[test]
    fn equality_sorts_propagate() {
        let f = parse("exists x0. x0 sqin y & x0 != a").unwrap();
        assert_eq!(f.params()["a"], Sort::P);
    }

    #[test]
    fn errors_carry_positions() {
        match parse("x sqin") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("x sqin y & y sqin z"), Err(Error::Sort { .. })));
        assert!(matches!(parse("R(x,a)"), Err(Error::Parse { .. })));
    }

    #[test]
    fn parenthesized_formula_backtracks() {
        let f = parse("!(x sqin y) & (x sqin b | true)").unwrap();
        assert!(matches!(f, Formula::And(ref v) if v.len() == 2));
    }
}
