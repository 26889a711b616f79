//! Complete quantifier-free configurations of P and Q symbols in `THalfInf`.
//!
//! A [`DiagramCase`] fixes which Q symbols are `bot` or `top`, the partition
//! of the others into `sim`-classes, which minterms of each class are
//! nonempty, equalities among P symbols and the minterm each point lies in.
//! Minterm `j` of a class has generator `i` positive iff bit `i` of `j` is 0.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::fragment::{Env, Fragment};
use super::intervals::IntervalUnion;
use super::qelem::QElem;
use super::Value;
use crate::error::{pre, Error, Result};
use crate::formula::{minterm, Atom, Formula, Sort, Term};
use crate::Rational;

/// Generators per class beyond which masks stop fitting a machine word.
pub const MAX_CLASS_GENERATORS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QState {
    Bot,
    Top,
    Class(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassCase {
    /// Indices into `q_syms`, ascending.
    pub gens: Vec<usize>,
    /// Bit `j` is set iff minterm `j` over `gens` is not `bot`.
    pub nonempty: u64,
}

impl ClassCase {
    pub fn minterms(&self) -> impl Iterator<Item = usize> + '_ {
        (0..1usize << self.gens.len()).filter(|j| self.nonempty >> j & 1 == 1)
    }

    fn gen_mask(&self, pos: usize) -> u64 {
        (0..1usize << self.gens.len()).filter(|j| j >> pos & 1 == 0).fold(0, |m, j| m | 1 << j) & self.nonempty
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiagramCase {
    pub q_syms: Vec<Term>,
    pub q_state: Vec<QState>,
    pub classes: Vec<ClassCase>,
    pub p_syms: Vec<Term>,
    /// Index of the first P symbol equal to each symbol.
    pub p_rep: Vec<usize>,
    /// `p_cell[i][c]` is the minterm of class `c` containing point `i`.
    pub p_cell: Vec<Vec<usize>>,
}

/// Value of a Q term under a case.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CaseVal {
    Bot,
    Top,
    Cls(usize, u64),
}

/// Concrete cells of a case computed from standard values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteCells {
    /// Copy index of each class.
    pub index: Vec<usize>,
    /// `cells[c][j]` is minterm `j` of class `c` as a subset of `[0,1)`.
    pub cells: Vec<Vec<IntervalUnion<Rational>>>,
}

/// The `ℓ`-value of a term: a constant plus a sum of cell masses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EllVal {
    pub constant: Rational,
    pub cells: Vec<(usize, usize)>,
}

impl DiagramCase {
    pub fn empty() -> DiagramCase {
        DiagramCase {
            q_syms: Vec::new(),
            q_state: Vec::new(),
            classes: Vec::new(),
            p_syms: Vec::new(),
            p_rep: Vec::new(),
            p_cell: Vec::new(),
        }
    }

    pub fn q_index(&self, t: &Term) -> Option<usize> {
        self.q_syms.iter().position(|s| s == t)
    }

    pub fn p_index(&self, t: &Term) -> Option<usize> {
        self.p_syms.iter().position(|s| s == t)
    }

    fn normalize(&self, c: usize, m: u64) -> CaseVal {
        let ne = self.classes[c].nonempty;
        let m = m & ne;
        if m == 0 {
            CaseVal::Bot
        } else if m == ne {
            CaseVal::Top
        } else {
            CaseVal::Cls(c, m)
        }
    }

    pub fn eval_term(&self, t: &Term) -> Result<CaseVal> {
        Ok(match t {
            Term::Bot => CaseVal::Bot,
            Term::Top => CaseVal::Top,
            Term::Var(..) | Term::Param(..) => {
                let i = self.q_index(t).ok_or_else(|| Error::Precondition(format!("`{t}` is not in the case")))?;
                match self.q_state[i] {
                    QState::Bot => CaseVal::Bot,
                    QState::Top => CaseVal::Top,
                    QState::Class(c) => {
                        let pos = self.classes[c].gens.iter().position(|&g| g == i).expect("generator of its class");
                        CaseVal::Cls(c, self.classes[c].gen_mask(pos))
                    }
                }
            }
            Term::Meet(a, b) => match (self.eval_term(a)?, self.eval_term(b)?) {
                (CaseVal::Bot, _) | (_, CaseVal::Bot) => CaseVal::Bot,
                (CaseVal::Top, v) | (v, CaseVal::Top) => v,
                (CaseVal::Cls(c, m), CaseVal::Cls(d, n)) if c == d => self.normalize(c, m & n),
                _ => CaseVal::Bot,
            },
            Term::Join(a, b) => match (self.eval_term(a)?, self.eval_term(b)?) {
                (CaseVal::Top, _) | (_, CaseVal::Top) => CaseVal::Top,
                (CaseVal::Bot, v) | (v, CaseVal::Bot) => v,
                (CaseVal::Cls(c, m), CaseVal::Cls(d, n)) if c == d => self.normalize(c, m | n),
                _ => CaseVal::Top,
            },
            Term::Comp(a) => match self.eval_term(a)? {
                CaseVal::Bot => CaseVal::Top,
                CaseVal::Top => CaseVal::Bot,
                CaseVal::Cls(c, m) => self.normalize(c, !m),
            },
        })
    }

    fn point(&self, t: &Term) -> Result<usize> {
        let i = self.p_index(t).ok_or_else(|| Error::Precondition(format!("point `{t}` is not in the case")))?;
        Ok(self.p_rep[i])
    }

    /// Truth of a P/Q atom; `None` for comparisons, which need masses.
    pub fn decide(&self, a: &Atom) -> Result<Option<bool>> {
        Ok(Some(match a {
            Atom::Sqin(p, t) => {
                let p = self.point(p)?;
                match self.eval_term(t)? {
                    CaseVal::Bot => false,
                    CaseVal::Top => true,
                    CaseVal::Cls(c, m) => m >> self.p_cell[p][c] & 1 == 1,
                }
            }
            Atom::Eq(s, t) if s.sort() == Sort::P => self.point(s)? == self.point(t)?,
            Atom::Eq(s, t) => self.eval_term(s)? == self.eval_term(t)?,
            Atom::Sim(s, t) => match (self.eval_term(s)?, self.eval_term(t)?) {
                (CaseVal::Cls(c, _), CaseVal::Cls(d, _)) => c == d,
                _ => false,
            },
            Atom::Cmp(..) => return Ok(None),
            a => return pre(format!("`{a}` is not a P/Q atom")),
        }))
    }

    pub fn ell(&self, t: &Term) -> Result<EllVal> {
        Ok(match self.eval_term(t)? {
            CaseVal::Bot => EllVal { constant: Rational::zero(), cells: Vec::new() },
            CaseVal::Top => EllVal { constant: Rational::one(), cells: Vec::new() },
            CaseVal::Cls(c, m) => EllVal {
                constant: Rational::zero(),
                cells: self.classes[c].minterms().filter(|j| m >> j & 1 == 1).map(|j| (c, j)).collect(),
            },
        })
    }

    /// Minterm `j` of class `c` as a lattice term over the class generators.
    pub fn minterm_term(&self, c: usize, j: usize) -> Term {
        let gens: Vec<Term> = self.classes[c].gens.iter().map(|&g| self.q_syms[g].clone()).collect();
        minterm(&gens, j)
    }

    /// All ways to add a new Q symbol.
    pub fn extend_q(&self, sym: Term) -> Result<Vec<DiagramCase>> {
        if self.q_index(&sym).is_some() {
            return pre(format!("`{sym}` already in the case"));
        }
        let idx = self.q_syms.len();
        let mut base = self.clone();
        base.q_syms.push(sym);
        let mut out = Vec::new();
        for st in [QState::Bot, QState::Top] {
            let mut c = base.clone();
            c.q_state.push(st);
            out.push(c);
        }
        let reps: Vec<usize> = (0..self.p_syms.len()).filter(|&i| self.p_rep[i] == i).collect();
        // a class of its own
        for bits in 0..1u64 << reps.len() {
            let mut c = base.clone();
            let cls = c.classes.len();
            c.q_state.push(QState::Class(cls));
            c.classes.push(ClassCase { gens: vec![idx], nonempty: 0b11 });
            for (k, &r) in reps.iter().enumerate() {
                c.p_cell[r].push((bits >> k & 1) as usize);
            }
            c.sync_copies();
            out.push(c);
        }
        // joining an existing class
        for (ci, class) in self.classes.iter().enumerate() {
            if class.gens.len() >= MAX_CLASS_GENERATORS {
                return Err(Error::Limit(format!("more than {MAX_CLASS_GENERATORS} generators in one class")));
            }
            let k = class.gens.len();
            let cells: Vec<usize> = class.minterms().collect();
            let total = 3usize.pow(cells.len() as u32);
            for code in 0..total {
                // 0: inside y, 1: outside y, 2: split
                let mut split = Vec::with_capacity(cells.len());
                let mut x = code;
                for _ in &cells {
                    split.push(x % 3);
                    x /= 3;
                }
                if split.iter().all(|&s| s == 1) || split.iter().all(|&s| s == 0) {
                    continue;
                }
                let mut nonempty = 0u64;
                for (&j, &s) in cells.iter().zip(&split) {
                    if s != 1 {
                        nonempty |= 1 << j;
                    }
                    if s != 0 {
                        nonempty |= 1 << (j | 1 << k);
                    }
                }
                let mut c = base.clone();
                c.q_state.push(QState::Class(ci));
                c.classes[ci] = ClassCase { gens: class.gens.iter().copied().chain([idx]).collect(), nonempty };
                // points in split cells choose a side
                let mut choices: Vec<(usize, usize)> = Vec::new();
                for &r in &reps {
                    let j = self.p_cell[r][ci];
                    let s = split[cells.iter().position(|&x| x == j).expect("points lie in nonempty cells")];
                    match s {
                        0 => c.p_cell[r][ci] = j,
                        1 => c.p_cell[r][ci] = j | 1 << k,
                        _ => choices.push((r, j)),
                    }
                }
                for bits in 0..1u64 << choices.len() {
                    let mut d = c.clone();
                    for (t, &(r, j)) in choices.iter().enumerate() {
                        d.p_cell[r][ci] = if bits >> t & 1 == 0 { j } else { j | 1 << k };
                    }
                    d.sync_copies();
                    out.push(d);
                }
            }
        }
        Ok(out)
    }

    /// All ways to add a new P symbol.
    pub fn extend_p(&self, sym: Term) -> Result<Vec<DiagramCase>> {
        if self.p_index(&sym).is_some() {
            return pre(format!("`{sym}` already in the case"));
        }
        let idx = self.p_syms.len();
        let mut out = Vec::new();
        for r in (0..self.p_syms.len()).filter(|&i| self.p_rep[i] == i) {
            let mut c = self.clone();
            c.p_syms.push(sym.clone());
            c.p_rep.push(r);
            c.p_cell.push(self.p_cell[r].clone());
            out.push(c);
        }
        let options: Vec<Vec<usize>> = self.classes.iter().map(|cl| cl.minterms().collect()).collect();
        let mut cur = vec![0usize; options.len()];
        loop {
            let mut c = self.clone();
            c.p_syms.push(sym.clone());
            c.p_rep.push(idx);
            c.p_cell.push(cur.iter().enumerate().map(|(i, &k)| options[i][k]).collect());
            out.push(c);
            let mut i = 0;
            while i < cur.len() {
                cur[i] += 1;
                if cur[i] < options[i].len() {
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
            if i == cur.len() {
                break;
            }
        }
        Ok(out)
    }

    fn sync_copies(&mut self) {
        for i in 0..self.p_syms.len() {
            let r = self.p_rep[i];
            if r != i {
                self.p_cell[i] = self.p_cell[r].clone();
            }
        }
    }

    /// Every case over the given symbols, Q symbols first.
    pub fn enumerate(q_syms: &[Term], p_syms: &[Term]) -> Result<Vec<DiagramCase>> {
        let mut cur = vec![DiagramCase::empty()];
        for q in q_syms {
            let mut next = Vec::new();
            for c in &cur {
                next.extend(c.extend_q(q.clone())?);
            }
            cur = next;
        }
        for p in p_syms {
            let mut next = Vec::new();
            for c in &cur {
                next.extend(c.extend_p(p.clone())?);
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Forgets every symbol outside `q_keep` and `p_keep`.
    pub fn restrict(&self, q_keep: &[Term], p_keep: &[Term]) -> DiagramCase {
        let kept_q: Vec<usize> = (0..self.q_syms.len()).filter(|&i| q_keep.contains(&self.q_syms[i])).collect();
        let kept_p: Vec<usize> = (0..self.p_syms.len()).filter(|&i| p_keep.contains(&self.p_syms[i])).collect();
        let new_q: BTreeMap<usize, usize> = kept_q.iter().enumerate().map(|(n, &o)| (o, n)).collect();
        let mut classes = Vec::new();
        let mut class_map: BTreeMap<usize, usize> = BTreeMap::new();
        let mut proj: Vec<Vec<usize>> = Vec::new();
        for (ci, cl) in self.classes.iter().enumerate() {
            let keep_pos: Vec<usize> = (0..cl.gens.len()).filter(|&p| new_q.contains_key(&cl.gens[p])).collect();
            if keep_pos.is_empty() {
                proj.push(Vec::new());
                continue;
            }
            let map_j = |j: usize| keep_pos.iter().enumerate().fold(0usize, |acc, (b, &p)| acc | ((j >> p & 1) << b));
            let mut nonempty = 0u64;
            for j in cl.minterms() {
                nonempty |= 1 << map_j(j);
            }
            proj.push((0..1usize << cl.gens.len()).map(map_j).collect());
            class_map.insert(ci, classes.len());
            classes.push(ClassCase { gens: keep_pos.iter().map(|&p| new_q[&cl.gens[p]]).collect(), nonempty });
        }
        let q_state = kept_q
            .iter()
            .map(|&i| match self.q_state[i] {
                QState::Class(c) => QState::Class(class_map[&c]),
                ref s => s.clone(),
            })
            .collect();
        let mut p_rep = Vec::new();
        let mut p_cell = Vec::new();
        for (n, &i) in kept_p.iter().enumerate() {
            let rep = kept_p.iter().position(|&k| self.p_rep[k] == self.p_rep[i]).expect("self is kept");
            debug_assert!(rep <= n);
            p_rep.push(rep);
            p_cell.push(
                class_map.iter().map(|(&old, _)| proj[old][self.p_cell[i][old]]).collect::<Vec<usize>>(),
            );
        }
        DiagramCase {
            q_syms: kept_q.iter().map(|&i| self.q_syms[i].clone()).collect(),
            q_state,
            classes,
            p_syms: kept_p.iter().map(|&i| self.p_syms[i].clone()).collect(),
            p_rep,
            p_cell,
        }
    }

    /// A conjunction of literals isolating this case.
    pub fn describe(&self) -> Formula {
        let mut lits = Vec::new();
        let eq = |a: Term, b: Term| Formula::Atom(Atom::Eq(a, b));
        for (i, s) in self.q_syms.iter().enumerate() {
            match self.q_state[i] {
                QState::Bot => lits.push(eq(s.clone(), Term::Bot)),
                QState::Top => lits.push(eq(s.clone(), Term::Top)),
                QState::Class(_) => {
                    lits.push(Formula::not(eq(s.clone(), Term::Bot)));
                    lits.push(Formula::not(eq(s.clone(), Term::Top)));
                }
            }
        }
        for i in 0..self.q_syms.len() {
            for j in i + 1..self.q_syms.len() {
                if let (QState::Class(a), QState::Class(b)) = (&self.q_state[i], &self.q_state[j]) {
                    let sim = Formula::Atom(Atom::Sim(self.q_syms[i].clone(), self.q_syms[j].clone()));
                    lits.push(if a == b { sim } else { Formula::not(sim) });
                }
            }
        }
        for (c, cl) in self.classes.iter().enumerate() {
            if cl.gens.len() < 2 {
                continue;
            }
            for j in 0..1usize << cl.gens.len() {
                let m = eq(self.minterm_term(c, j), Term::Bot);
                lits.push(if cl.nonempty >> j & 1 == 1 { Formula::not(m) } else { m });
            }
        }
        for i in 0..self.p_syms.len() {
            for j in i + 1..self.p_syms.len() {
                let e = eq(self.p_syms[i].clone(), self.p_syms[j].clone());
                lits.push(if self.p_rep[i] == self.p_rep[j] { e } else { Formula::not(e) });
            }
        }
        for (i, p) in self.p_syms.iter().enumerate() {
            if self.p_rep[i] != i {
                continue;
            }
            for c in 0..self.classes.len() {
                lits.push(Formula::Atom(Atom::Sqin(p.clone(), self.minterm_term(c, self.p_cell[i][c]))));
            }
        }
        Formula::and(lits)
    }

    /// The case realized by standard values, with its concrete cells.
    pub fn from_values(
        frag: &Fragment,
        env: &Env,
        q_syms: &[Term],
        p_syms: &[Term],
    ) -> Result<(DiagramCase, ConcreteCells)> {
        let mut case = DiagramCase::empty();
        let mut index = Vec::new();
        let mut sets: Vec<Vec<IntervalUnion<Rational>>> = Vec::new();
        for t in q_syms {
            let q = match frag.eval_term(t, env)? {
                Value::Q(q) => q,
                v => return pre(format!("`{t}` = {v} is not a Q element")),
            };
            let i = case.q_syms.len();
            case.q_syms.push(t.clone());
            let st = match q {
                QElem::Bot => QState::Bot,
                QElem::Top => QState::Top,
                QElem::Pair(n, x) => {
                    let c = match index.iter().position(|&m| m == n) {
                        Some(c) => c,
                        None => {
                            index.push(n);
                            sets.push(Vec::new());
                            case.classes.push(ClassCase { gens: Vec::new(), nonempty: 0 });
                            index.len() - 1
                        }
                    };
                    if case.classes[c].gens.len() >= MAX_CLASS_GENERATORS {
                        return Err(Error::Limit(format!("more than {MAX_CLASS_GENERATORS} generators in one class")));
                    }
                    case.classes[c].gens.push(i);
                    sets[c].push(x);
                    QState::Class(c)
                }
            };
            case.q_state.push(st);
        }
        let mut cells = Vec::new();
        for (c, gens) in sets.iter().enumerate() {
            let k = gens.len();
            let mut row = Vec::new();
            let mut nonempty = 0u64;
            for j in 0..1usize << k {
                let mut cell = IntervalUnion::full();
                for (i, g) in gens.iter().enumerate() {
                    cell = if j >> i & 1 == 0 { cell.intersect(g) } else { cell.intersect(&g.complement()) };
                }
                if !cell.is_empty() {
                    nonempty |= 1 << j;
                }
                row.push(cell);
            }
            case.classes[c].nonempty = nonempty;
            cells.push(row);
        }
        let mut points = Vec::new();
        for t in p_syms {
            let p = match frag.eval_term(t, env)? {
                Value::Point(p) => p,
                v => return pre(format!("`{t}` = {v} is not a point")),
            };
            let i = case.p_syms.len();
            let rep = points.iter().position(|q| *q == p).unwrap_or(i);
            let row = (0..index.len())
                .map(|c| {
                    let v = p.coord(index[c]);
                    cells[c].iter().position(|x| x.contains(&v)).expect("cells partition [0,1)")
                })
                .collect();
            points.push(p);
            case.p_syms.push(t.clone());
            case.p_rep.push(rep);
            case.p_cell.push(row);
        }
        Ok((case, ConcreteCells { index, cells }))
    }
}
