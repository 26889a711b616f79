//! Acceptance suite. Each criterion prints one `criterion N: PASS|FAIL` line;
//! run with `cargo test --test acceptance -- --nocapture` to see them.
//!
//! Every comparison of measure values is exact rational equality. The only
//! other tolerances are the wall-clock budgets below, taken at the workspace
//! test profile.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use keisler::approx::{binomial_tail_exact, fim_convexity_check, wlln_bound};
use keisler::formula::{to_dnf_capped, Atom, Formula, Term};
use keisler::measures::{
    convex_combine, independent_family_measure, normal_form_value, GlobalType, IndependentFamilySpec, Measure, Point,
};
use keisler::morley::{check_assoc, product_eval};
use keisler::qe::eliminate_quantifiers;
use keisler::scenarios::{
    qpq_tuple, run_henson_tgood, run_nocom, run_qpq_suite, run_ternary_gap, run_thalf_nonfam,
    run_thalf_satisfiability,
};
use keisler::theories::{realize_in_standard_model, Fragment, HalfSet, IntervalUnion, QElem, TheoryId};
use keisler::types::enumerate_types;
use keisler::{Error, Rational};
use num::bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x6b65_6973_6c65_7200;

/// Tolerance on measure values: none, equality is exact.
const VALUE_TOLERANCE: i64 = 0;

const BUDGET_COIN_FLIP: Duration = Duration::from_secs(5);
const BUDGET_PRODUCT_ORACLE: Duration = Duration::from_secs(30);
const BUDGET_TERNARY_GAP: Duration = Duration::from_secs(60);
const BUDGET_NOCOM: Duration = Duration::from_secs(1);
const BUDGET_QE: Duration = Duration::from_secs(120);

type Run = fn() -> Result<Check, Error>;

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Option<Duration>,
    run: Run,
}

#[derive(Default)]
struct Check {
    cases: usize,
    failures: Vec<String>,
}

impl Check {
    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn same(&mut self, got: &Rational, want: &Rational, what: impl FnOnce() -> String) {
        debug_assert_eq!(VALUE_TOLERANCE, 0);
        self.expect(got == want, || format!("{}: got {got}, want {want}", what()));
    }
}

fn rng(criterion: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ criterion)
}

fn q(a: i64, b: i64) -> Rational {
    Rational::new(a.into(), b.into())
}

fn vars(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn frag(text: &str) -> Fragment {
    Fragment::from_text(text).expect("fragment text")
}

fn tr_fragment(rng: &mut ChaCha8Rng, params: &[&str]) -> Fragment {
    let mut text = String::from("theory tr\n");
    if !params.is_empty() {
        text += &format!("param {}\n", params.join(", "));
    }
    for a in params {
        for b in params {
            for c in params {
                if rng.gen_bool(0.5) {
                    text += &format!("fact R({a},{b},{c})\n");
                }
            }
        }
    }
    frag(&text)
}

fn graph_fragment(rng: &mut ChaCha8Rng, params: &[&str]) -> Fragment {
    let mut text = format!("theory random-graph\nparam {}\n", params.join(", "));
    for (i, a) in params.iter().enumerate() {
        for b in &params[i + 1..] {
            if rng.gen_bool(0.5) {
                text += &format!("fact E({a},{b})\n");
            }
        }
    }
    frag(&text)
}

/// Random Boolean combination of the given atom strings.
fn random_formula(rng: &mut ChaCha8Rng, atoms: &[String], depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.3) {
        return atoms.choose(rng).unwrap().clone();
    }
    match rng.gen_range(0..3) {
        0 => format!("!({})", random_formula(rng, atoms, depth - 1)),
        1 => format!("({} & {})", random_formula(rng, atoms, depth - 1), random_formula(rng, atoms, depth - 1)),
        _ => format!("({} | {})", random_formula(rng, atoms, depth - 1), random_formula(rng, atoms, depth - 1)),
    }
}

fn relational_atoms(graph: bool, terms: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    for a in terms {
        for b in terms {
            if a < b {
                out.push(format!("{a} = {b}"));
            }
            if graph {
                if a != b {
                    out.push(format!("E({a},{b})"));
                }
            } else {
                for c in terms {
                    out.push(format!("R({a},{b},{c})"));
                }
            }
        }
    }
    out
}

fn dirac(f: &Fragment, name: &str) -> Measure {
    Measure::dirac(f.value(name).expect("parameter").clone())
}

fn average(f: &Fragment, names: &[&str]) -> Measure {
    Measure::Average(names.iter().map(|n| f.value(n).expect("parameter").clone()).collect())
}

/// Definable measures over a fragment with parameters `a, b`.
fn definable_measures(f: &Fragment) -> Vec<Measure> {
    let mut out = vec![dirac(f, "a"), dirac(f, "b"), average(f, &["a", "b"]), Measure::coin_flip()];
    if f.theory == TheoryId::TR {
        out.push(convex_combine(vec![(q(1, 3), dirac(f, "a")), (q(2, 3), Measure::coin_flip())]).unwrap());
        out.push(Measure::Dirac(Point::Type(GlobalType::TernaryP { witnesses: vars(&["a"]) })));
    } else {
        let na = Measure::Dirac(Point::Type(GlobalType::NonAdjacent));
        out.push(convex_combine(vec![(q(1, 2), na.clone()), (q(1, 2), dirac(f, "b"))]).unwrap());
        out.push(na);
    }
    out
}

// ---------------------------------------------------------------------------
// 1. Coin-flip law

fn coin_flip_law() -> Result<Check, Error> {
    let mut rng = rng(1);
    let mut chk = Check::default();
    let names = ["a", "b", "c"];
    let x = vars(&["x"]);
    for case in 0..500 {
        let p = rng.gen_range(0..=3);
        let f = tr_fragment(&mut rng, &names[..p]);
        let mut terms = vec!["x"];
        terms.extend(&names[..p]);
        let mut inst = Vec::new();
        for a in &terms {
            for b in &terms {
                for c in &terms {
                    if [a, b, c].contains(&&"x") {
                        inst.push(format!("R({a},{b},{c})"));
                    }
                }
            }
        }
        inst.shuffle(&mut rng);
        let k = rng.gen_range(1..=inst.len().min(6));
        let lits: Vec<String> =
            inst[..k].iter().map(|a| if rng.gen_bool(0.5) { format!("!{a}") } else { a.clone() }).collect();
        let text = lits.join(" & ");
        let got = Measure::coin_flip().eval(&x, &f.parse_formula(&text)?, &f)?;
        chk.same(&got, &q(1, 1 << k), || format!("case {case}: `{text}`"));
    }
    Ok(chk)
}

// ---------------------------------------------------------------------------
// 2. Morley product against a brute-force double sum

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum El {
    A,
    X,
    Y,
}

#[derive(Debug, Clone)]
enum Qf {
    R([usize; 3]),
    Eq(usize, usize),
    Not(Box<Qf>),
    And(Box<Qf>, Box<Qf>),
    Or(Box<Qf>, Box<Qf>),
}

const TERMS: [&str; 3] = ["x", "y", "a"];

impl Qf {
    fn random(rng: &mut ChaCha8Rng, nterms: usize, depth: usize) -> Qf {
        if depth == 0 || rng.gen_bool(0.25) {
            let relation = rng.gen_bool(0.8);
            let t: Vec<usize> = (0..3).map(|_| rng.gen_range(0..nterms)).collect();
            return if relation { Qf::R([t[0], t[1], t[2]]) } else { Qf::Eq(t[0], t[1]) };
        }
        let op = rng.gen_range(0..3);
        let g = Box::new(Qf::random(rng, nterms, depth - 1));
        if op == 0 {
            return Qf::Not(g);
        }
        let h = Box::new(Qf::random(rng, nterms, depth - 1));
        if op == 1 {
            Qf::And(g, h)
        } else {
            Qf::Or(g, h)
        }
    }

    fn render(&self) -> String {
        match self {
            Qf::R([a, b, c]) => format!("R({},{},{})", TERMS[*a], TERMS[*b], TERMS[*c]),
            Qf::Eq(a, b) => format!("{} = {}", TERMS[*a], TERMS[*b]),
            Qf::Not(g) => format!("!({})", g.render()),
            Qf::And(g, h) => format!("({} & {})", g.render(), h.render()),
            Qf::Or(g, h) => format!("({} | {})", g.render(), h.render()),
        }
    }

    fn relation_triples(&self, out: &mut Vec<[usize; 3]>) {
        match self {
            Qf::R(t) => out.push(*t),
            Qf::Eq(..) => {}
            Qf::Not(g) => g.relation_triples(out),
            Qf::And(g, h) | Qf::Or(g, h) => {
                g.relation_triples(out);
                h.relation_triples(out);
            }
        }
    }

    fn holds(&self, el: &[El; 3], fact: &dyn Fn([El; 3]) -> bool) -> bool {
        match self {
            Qf::R([a, b, c]) => fact([el[*a], el[*b], el[*c]]),
            Qf::Eq(a, b) => el[*a] == el[*b],
            Qf::Not(g) => !g.holds(el, fact),
            Qf::And(g, h) => g.holds(el, fact) && h.holds(el, fact),
            Qf::Or(g, h) => g.holds(el, fact) || h.holds(el, fact),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Dirac,
    Average,
    CoinFlip,
}

/// `(μ_x ⊗ ν_y)(φ)` as `Σ_{tp(b/A)} ν(tp) · μ(φ(x,b))`. A coin-flip `y`
/// ranges over all of `S_y(A)`; a coin-flip `x` over the sign patterns of the
/// `x`-instances occurring in `φ`, the others integrating out to 1.
fn double_sum(f: &Qf, mu: Kind, nu: Kind, with_a: bool, raaa: bool) -> Rational {
    let xe = if mu == Kind::CoinFlip { El::X } else { El::A };
    let ye = if nu == Kind::CoinFlip { El::Y } else { El::A };
    let el = [xe, ye, El::A];
    let mut base = vec![El::Y];
    if with_a {
        base.push(El::A);
    }
    let mut ytrip = Vec::new();
    if ye == El::Y {
        for &a in &base {
            for &b in &base {
                for &c in &base {
                    if [a, b, c].contains(&El::Y) {
                        ytrip.push([a, b, c]);
                    }
                }
            }
        }
    }
    let mut raw = Vec::new();
    f.relation_triples(&mut raw);
    let mut xtrip: Vec<[El; 3]> = Vec::new();
    for t in raw {
        let e = [el[t[0]], el[t[1]], el[t[2]]];
        if e.contains(&El::X) && !xtrip.contains(&e) {
            xtrip.push(e);
        }
    }
    let mut hits = 0u64;
    for ym in 0u64..1 << ytrip.len() {
        for xm in 0u64..1 << xtrip.len() {
            let fact = |t: [El; 3]| {
                if let Some(i) = xtrip.iter().position(|s| *s == t) {
                    xm >> i & 1 == 1
                } else if let Some(i) = ytrip.iter().position(|s| *s == t) {
                    ym >> i & 1 == 1
                } else {
                    assert!(t.iter().all(|e| *e == El::A), "unassigned triple {t:?}");
                    raaa
                }
            };
            if f.holds(&el, &fact) {
                hits += 1;
            }
        }
    }
    Rational::new(hits.into(), BigInt::one() << (ytrip.len() + xtrip.len()))
}

fn product_oracle() -> Result<Check, Error> {
    let mut rng = rng(2);
    let mut chk = Check::default();
    let (xs, ys) = (vars(&["x"]), vars(&["y"]));
    for case in 0..100 {
        let with_a = rng.gen_bool(0.8);
        let raaa = rng.gen_bool(0.5);
        let text = match (with_a, raaa) {
            (false, _) => "theory tr\n".to_string(),
            (true, false) => "theory tr\nparam a\n".to_string(),
            (true, true) => "theory tr\nparam a\nfact R(a,a,a)\n".to_string(),
        };
        let f = frag(&text);
        let kinds: &[Kind] = if with_a { &[Kind::Dirac, Kind::Average, Kind::CoinFlip] } else { &[Kind::CoinFlip] };
        let (mk, nk) = (*kinds.choose(&mut rng).unwrap(), *kinds.choose(&mut rng).unwrap());
        let build = |k: Kind| match k {
            Kind::Dirac => dirac(&f, "a"),
            Kind::Average => average(&f, &["a"]),
            Kind::CoinFlip => Measure::coin_flip(),
        };
        let phi = Qf::random(&mut rng, if with_a { 3 } else { 2 }, 3);
        let parsed = f.parse_formula(&phi.render())?;
        let got = product_eval(&build(mk), &xs, &build(nk), &ys, &parsed, &f)?;
        let want = double_sum(&phi, mk, nk, with_a, raaa);
        chk.same(&got, &want, || format!("case {case}: {mk:?} x {nk:?} on `{}` over `{}`", phi.render(), text.trim()));
    }
    Ok(chk)
}

// ---------------------------------------------------------------------------
// 3. Associativity for definable triples

fn associativity() -> Result<Check, Error> {
    let mut rng = rng(3);
    let mut chk = Check::default();
    let vs = [String::from("x"), String::from("y"), String::from("z")];
    for case in 0..50 {
        let graph = rng.gen_bool(0.5);
        let f = if graph { graph_fragment(&mut rng, &["a", "b"]) } else { tr_fragment(&mut rng, &["a", "b"]) };
        let ms = definable_measures(&f);
        let pick = |rng: &mut ChaCha8Rng| ms.choose(rng).unwrap().clone();
        let (mu, nu, lam) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        let atoms = relational_atoms(graph, &["x", "y", "z", "a"]);
        let pool: Vec<Formula> =
            (0..4).map(|_| f.parse_formula(&random_formula(&mut rng, &atoms, 2))).collect::<Result<_, _>>()?;
        let report = check_assoc(&mu, &nu, &lam, &vs, &f, &pool)?;
        chk.expect(report.is_equal(), || format!("case {case}: {mu}, {nu}, {lam}: {report:?}"));
    }
    Ok(chk)
}

// ---------------------------------------------------------------------------
// 4. Ternary associativity gap

fn instance_count(m: usize) -> usize {
    let n = m + 1;
    let mut count = 0;
    for t in 0..n * n * n {
        if [t % n, t / n % n, t / (n * n)].contains(&m) {
            count += 1;
        }
    }
    count
}

fn ternary_gap() -> Result<Check, Error> {
    let mut chk = Check::default();
    let one = frag("theory tr\nparam b0\n");
    let space = enumerate_types(&one, &vars(&["z"]))?;
    let free = space.types.iter().filter(|t| !t.is_realized()).count();
    chk.expect(free == 1 << instance_count(1), || format!("S_z(b0) has {free} non-realized types"));
    for (m, kappa) in [(1usize, 2usize), (2, 3)] {
        let n = instance_count(m);
        let res = run_ternary_gap(m, kappa)?;
        let want = q(kappa as i64, 1 << n);
        let row = |l: &str| res.get(l).cloned().unwrap_or_else(|| q(-1, 1));
        chk.same(&row("instances"), &q(n as i64, 1), || format!("m={m} instances"));
        chk.same(&row("eta1"), &q(1, 1), || format!("m={m} eta1"));
        chk.same(&row("eta2"), &want, || format!("m={m} kappa={kappa} eta2"));
        chk.same(&row("eta2_enumerated"), &want, || format!("m={m} eta2 by enumeration"));
        chk.same(&row("eta2_formula"), &want, || format!("m={m} eta2 formula"));
        if let Some(v) = res.get("eta1_library") {
            chk.same(v, &q(1, 1), || format!("m={m} eta1 via products"));
        }
        chk.expect(res.pass, || format!("m={m} verdict"));
    }
    Ok(chk)
}

// ---------------------------------------------------------------------------
// 5. Non-commutation in the infinite half-measure theory

fn nocom() -> Result<Check, Error> {
    let mut chk = Check::default();
    let res = run_nocom()?;
    let vals: Vec<&Rational> = res.rows.iter().map(|(_, v)| v).collect();
    chk.expect(vals == [&q(1, 2), &q(1, 1)], || format!("rows {:?}", res.rows));
    chk.expect(res.pass, || "verdict".into());
    Ok(chk)
}

// ---------------------------------------------------------------------------
// 6. Finite half-measure theory

fn thalf() -> Result<Check, Error> {
    let mut rng = rng(6);
    let mut chk = Check::default();
    for case in 0..100 {
        let n = rng.gen_range(1..=8);
        let mut points = BTreeSet::new();
        while points.len() < n {
            let d = rng.gen_range(2..=24);
            points.insert(q(rng.gen_range(0..d), d));
        }
        let points: Vec<Rational> = points.into_iter().collect();
        let res = run_thalf_satisfiability(&points)?;
        let step = q(1, 2 * n as i64);
        let mut ivs = Vec::new();
        let mut i = 0;
        while let (Some(lo), Some(hi)) = (res.get(&format!("b{i}.lo")), res.get(&format!("b{i}.hi"))) {
            ivs.push((lo.clone(), hi.clone()));
            i += 1;
        }
        let on_grid = ivs.iter().all(|(lo, hi)| (lo / &step).is_integer() && (hi / &step).is_integer());
        let mass: Rational = ivs.iter().map(|(lo, hi)| hi - lo).sum();
        let covered = points.iter().all(|a| ivs.iter().any(|(lo, hi)| lo <= a && a < hi));
        chk.expect(res.pass && on_grid && mass == q(1, 2) && covered, || {
            format!("satisfiability case {case}: points {points:?}, intervals {ivs:?}")
        });
    }
    for case in 0..100 {
        let len = rng.gen_range(1..=8);
        let mut bs = Vec::new();
        for _ in 0..len {
            let n = rng.gen_range(1..=6);
            let mut idx: Vec<usize> = (0..2 * n).collect();
            idx.shuffle(&mut rng);
            bs.push(HalfSet::from_indices(n, &idx[..n])?);
        }
        let res = run_thalf_nonfam(&bs)?;
        let a = res.get("a").cloned().unwrap_or_else(|| q(-1, 1));
        let hits = bs
            .iter()
            .filter(|b| b.set().intervals().iter().any(|(lo, hi)| lo <= &a && &a < hi))
            .count();
        let frac = q(hits as i64, len as i64);
        chk.expect(
            res.pass && res.get("hits") == Some(&q(hits as i64, 1)) && frac <= q(1, 2),
            || format!("non-fam case {case}: a = {a}, {hits} of {len} sets"),
        );
    }
    Ok(chk)
}

// ---------------------------------------------------------------------------
// 7. q_PQ approximations and the order property

fn qpq() -> Result<Check, Error> {
    let mut rng = rng(7);
    let mut chk = Check::default();
    for n in [2usize, 4, 8, 12] {
        let tuple = qpq_tuple(n)?;
        let mut own = BTreeSet::new();
        for i in 0..n {
            for j in 0..n {
                let cell = IntervalUnion::interval(q(j as i64, n as i64), q(j as i64 + 1, n as i64))?;
                own.insert(QElem::pair(i, cell).comp());
            }
        }
        chk.expect(tuple.len() == n * n && tuple.iter().cloned().collect::<BTreeSet<_>>() == own, || {
            format!("n={n}: tuple differs from the complements of the grid cells")
        });
        // a point lies in d_{i,j} for exactly one j per copy i < n
        for _ in 0..20 {
            let coords: Vec<Rational> = (0..n).map(|_| q(rng.gen_range(0..1000), 1000)).collect();
            let inside = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|&(i, j)| {
                    let (lo, hi) = (q(j as i64, n as i64), q(j as i64 + 1, n as i64));
                    !(lo <= coords[i] && coords[i] < hi)
                })
                .count();
            chk.same(&q(inside as i64, (n * n) as i64), &q(n as i64 - 1, n as i64), || format!("n={n} Av"));
        }
        let res = run_qpq_suite(n, 4)?;
        let err = res.get("av_error(x sqin y)").cloned().unwrap_or_else(|| q(-1, 1));
        chk.same(&err, &q(1, n as i64), || format!("n={n} av_error"));
        if let Some(g) = res.get("generic_av_error(x sqin y)") {
            chk.same(g, &q(1, n as i64), || format!("n={n} generic av_error"));
        }
        chk.same(res.get("patterns").unwrap_or(&q(-1, 1)), &q(16, 1), || format!("n={n} patterns"));
        chk.same(res.get("patterns_verified").unwrap_or(&q(-1, 1)), &q(16, 1), || format!("n={n} verified"));
        chk.expect(res.pass, || format!("n={n} verdict"));
    }
    Ok(chk)
}

// ---------------------------------------------------------------------------
// 8. Quantifier elimination soundness

const QE_TEMPLATE: &str = "theory thalf-inf\nparam a : P\nparam b : Q = 0:[0,1/2)\nparam c : Q = 1:[1/4,3/4)\nparam r : R = 1/3\n";

fn qe_atoms(p: &[&str], qs: &[&str], rs: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    for x in p {
        for y in qs {
            out.push(format!("{x} sqin {y}"));
        }
        for y in p {
            if x < y {
                out.push(format!("{x} = {y}"));
            }
        }
    }
    for y in qs {
        for z in qs {
            if y < z {
                out.push(format!("{y} = {z}"));
                out.push(format!("{y} sim {z}"));
                out.push(format!("({y} meet {z}) = {y}"));
                out.push(format!("l({y} join {z}) < r"));
            }
        }
        out.push(format!("{y} = bot"));
        out.push(format!("l({y}) = 1/2"));
        out.push(format!("l({y}) < r"));
        for z in rs {
            out.push(format!("{z} < l({y})"));
        }
    }
    for z in rs {
        out.push(format!("{z} + {z} = r"));
        out.push(format!("0 < {z}"));
    }
    out
}

/// `exists`/`forall` block over fresh variables of random sorts.
fn qe_block(rng: &mut ChaCha8Rng, count: usize, start: usize) -> String {
    let sorts: Vec<u8> = (0..count).map(|_| rng.gen_range(0..3)).collect();
    let names: Vec<String> =
        sorts.iter().enumerate().map(|(i, s)| format!("{}{}", ["x", "y", "z"][*s as usize], start + i)).collect();
    let mut p: Vec<&str> = vec!["a"];
    let mut qs: Vec<&str> = vec!["b", "c"];
    let mut rs: Vec<&str> = vec![];
    for (n, s) in names.iter().zip(&sorts) {
        match s {
            0 => p.push(n),
            1 => qs.push(n),
            _ => rs.push(n),
        }
    }
    let all = qe_atoms(&p, &qs, &rs);
    let own: Vec<String> = all.iter().filter(|a| names.iter().all(|n| a.contains(n.as_str()))).cloned().collect();
    let own = if own.is_empty() { all.iter().filter(|a| names.iter().any(|n| a.contains(n.as_str()))).cloned().collect() } else { own };
    let mut parts = vec![own.choose(rng).unwrap().clone()];
    for n in &names {
        let mine: Vec<&String> = all.iter().filter(|a| a.contains(n.as_str())).collect();
        parts.push((*mine.choose(rng).unwrap()).clone());
    }
    for _ in 0..rng.gen_range(0..3) {
        parts.push(random_formula(rng, &all, 1));
    }
    parts.shuffle(rng);
    let mut body = parts[0].clone();
    for p in &parts[1..] {
        body = if rng.gen_bool(0.6) { format!("({body} & {p})") } else { format!("({body} | {p})") };
    }
    let kw = if rng.gen_bool(0.5) { "exists" } else { "forall" };
    let prefix: String = names.iter().map(|n| format!("{kw} {n}. ")).collect();
    format!("({prefix}{body})")
}

fn random_sentence(rng: &mut ChaCha8Rng) -> String {
    let neg = |rng: &mut ChaCha8Rng, s: String| if rng.gen_bool(0.3) { format!("!{s}") } else { s };
    match rng.gen_range(0..3) {
        k @ (0 | 1) => {
            let b = qe_block(rng, k + 1, 0);
            neg(rng, b)
        }
        _ => {
            let (l, r) = (qe_block(rng, 1, 0), qe_block(rng, 1, 1));
            let (l, r) = (neg(rng, l), neg(rng, r));
            let extra = random_formula(rng, &qe_atoms(&["a"], &["b", "c"], &[]), 0);
            if rng.gen_bool(0.5) {
                format!("{l} & ({r} | {extra})")
            } else {
                format!("{l} | ({r} & {extra})")
            }
        }
    }
}

/// Standard-model truth: each quantifier block is decided by a witness search
/// for its matrix (or the negated matrix for `forall`).
fn truth(f: &Fragment, phi: &Formula) -> Result<bool, Error> {
    Ok(match phi {
        Formula::Exists(_, body) => {
            let mut m = body.as_ref();
            while let Formula::Exists(_, inner) = m {
                m = inner;
            }
            realize_in_standard_model(f, m)?.is_some()
        }
        Formula::Forall(_, body) => {
            let mut m = body.as_ref();
            while let Formula::Forall(_, inner) = m {
                m = inner;
            }
            realize_in_standard_model(f, &Formula::not(m.clone()))?.is_none()
        }
        Formula::Not(g) => !truth(f, g)?,
        Formula::And(gs) => {
            let mut all = true;
            for g in gs {
                all &= truth(f, g)?;
            }
            all
        }
        Formula::Or(gs) => {
            let mut any = false;
            for g in gs {
                any |= truth(f, g)?;
            }
            any
        }
        qf => f.holds(qf)?,
    })
}

fn random_q_value(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..10) {
        0 => "bot".into(),
        1 => "top".into(),
        _ => {
            let count = 2 * rng.gen_range(1..=2);
            let mut cuts: Vec<i64> = (0..8).collect::<Vec<_>>().choose_multiple(rng, count).cloned().collect();
            cuts.sort();
            let ivs: Vec<String> = cuts.chunks(2).map(|c| format!("[{}/8,{}/8)", c[0], c[1] + 1)).collect();
            let merged = IntervalUnion::<Rational>::new(
                cuts.chunks(2).map(|c| (q(c[0], 8), q(c[1] + 1, 8))).collect(),
            )
            .expect("valid intervals");
            if merged.is_full() || merged.is_empty() {
                "top".into()
            } else {
                format!("{}:{}", rng.gen_range(0..3), ivs.join("+"))
            }
        }
    }
}

fn random_pq_fragment(rng: &mut ChaCha8Rng) -> Fragment {
    let values: Vec<i64> = (0..16).collect::<Vec<_>>().choose_multiple(rng, 3).cloned().collect();
    let mut coords = Vec::new();
    for (k, v) in values.iter().enumerate() {
        if rng.gen_bool(0.5) {
            coords.push(format!("{k}: {v}/16"));
        }
    }
    let text = format!(
        "theory thalf-inf\nparam a : P = {{{}}}\nparam b : Q = {}\nparam c : Q = {}\nparam r : R = {}/12\n",
        coords.join(", "),
        random_q_value(rng),
        random_q_value(rng),
        rng.gen_range(-3..=15),
    );
    frag(&text)
}

fn qe_soundness() -> Result<Check, Error> {
    let mut rng = rng(8);
    let mut chk = Check::default();
    let template = frag(QE_TEMPLATE);
    for case in 0..50 {
        let text = random_sentence(&mut rng);
        let phi = template.parse_formula(&text)?;
        let out = eliminate_quantifiers(&phi, TheoryId::THalfInf)?;
        chk.expect(out.is_qf() && phi.quantifier_depth() <= 2, || format!("case {case}: `{out}` not qf"));
        let mut bad = None;
        for k in 0..200 {
            let f = random_pq_fragment(&mut rng);
            let (lhs, rhs) = (truth(&f, &phi)?, f.holds(&out)?);
            if lhs != rhs {
                bad = Some(format!("case {case}, evaluation {k}: `{text}` is {lhs}, eliminated form is {rhs} over\n{}", f.to_text()));
                break;
            }
        }
        chk.expect(bad.is_none(), || bad.unwrap());
    }
    Ok(chk)
}

// ---------------------------------------------------------------------------
// 9. Concentration bounds

/// `Σ_{|k/n − r| < ε} C(n,k) r^k (1−r)^{n−k}` by integer arithmetic.
fn binomial_oracle(r: &Rational, eps: &Rational, n: usize) -> Rational {
    let (p, d) = (r.numer().clone(), r.denom().clone());
    let mut num = BigInt::zero();
    let mut c = BigInt::one();
    for k in 0..=n {
        if k > 0 {
            c = c * BigInt::from(n - k + 1) / BigInt::from(k);
        }
        if (q(k as i64, n as i64) - r).abs() < *eps {
            num += &c * num::pow(p.clone(), k) * num::pow(&d - &p, n - k);
        }
    }
    Rational::new(num, num::pow(d, n))
}

fn bounds() -> Result<Check, Error> {
    let mut chk = Check::default();
    for r in [q(0, 1), q(1, 4), q(1, 2), q(3, 4), q(1, 1)] {
        for eps in [q(1, 8), q(1, 4), q(1, 2)] {
            for n in 1..=64usize {
                let tail = binomial_tail_exact(&r, &eps, n)?;
                let raw = Rational::one() - &r * (Rational::one() - &r) / (&eps * &eps * q(n as i64, 1));
                let chebyshev = if raw.is_negative() { Rational::zero() } else { raw };
                chk.same(&wlln_bound(&r, &eps, n)?, &chebyshev, || format!("wlln({r},{eps},{n})"));
                chk.same(&tail, &binomial_oracle(&r, &eps, n), || format!("tail({r},{eps},{n})"));
                chk.expect(tail >= chebyshev, || format!("tail below bound at ({r},{eps},{n})"));
            }
        }
    }
    let spot = binomial_tail_exact(&q(1, 2), &q(1, 4), 16)?;
    chk.same(&spot, &binomial_oracle(&q(1, 2), &q(1, 4), 16), || "spot value vs oracle".into());
    chk.same(&spot, &q(30251, 32768), || "spot value".into());
    Ok(chk)
}

// ---------------------------------------------------------------------------
// 10. Convex decomposition of powers

fn fim_convexity() -> Result<Check, Error> {
    let mut rng = rng(10);
    let mut chk = Check::default();
    for case in 0..20 {
        let graph = case % 2 == 1;
        let f = if graph { graph_fragment(&mut rng, &["a", "b"]) } else { tr_fragment(&mut rng, &["a", "b"]) };
        let ms = definable_measures(&f);
        let mu = ms.choose(&mut rng).unwrap().clone();
        let nu = ms.choose(&mut rng).unwrap().clone();
        let r = [q(0, 1), q(1, 3), q(1, 2), q(3, 4), q(1, 1)].choose(&mut rng).unwrap().clone();
        let atoms = relational_atoms(graph, &["x1", "x2", "a"]);
        let pool: Vec<Formula> =
            (0..4).map(|_| f.parse_formula(&random_formula(&mut rng, &atoms, 2))).collect::<Result<_, _>>()?;
        let report = fim_convexity_check(&mu, &nu, &r, 2, &f, &pool)?;
        chk.expect(report.is_equal(), || format!("case {case}: {mu}, {nu}, r = {r}: {report:?}"));
    }
    Ok(chk)
}

// ---------------------------------------------------------------------------
// 11. Henson good sets

const HENSON_CASES: &[(&str, usize, &str)] = &[
    ("theory henson 3\nparam m0, m1\nfact E(m0,m1)\n", 3, "E(x1,x2)"),
    ("theory henson 3\nparam m0, m1\nfact E(m0,m1)\n", 3, "x1 = m0 & E(x2,x3)"),
    ("theory henson 3\nparam m0, m1\nfact E(m0,m1)\n", 4, "E(x1,x2) | E(x3,x4)"),
    ("theory henson 3\nparam m0, m1\nfact E(m0,m1)\n", 4, "x1 = x2 & E(x2,x3) & !E(x3,x4)"),
    ("theory henson 3\nparam m0, m1\nfact E(m0,m1)\n", 3, "x1 = m0 | x2 = m1"),
    ("theory henson 3\nparam m0, m1\nfact E(m0,m1)\n", 4, "E(x1,x2) & E(x2,x3) & E(x3,x4)"),
    ("theory henson 3\nparam m0, m1\nfact E(m0,m1)\n", 3, "E(x1,x2) & E(x2,x3) & E(x1,x3) | x1 = x2"),
    ("theory henson 4\nparam m0, m1, m2\nfact E(m0,m1)\nfact E(m1,m2)\n", 4, "E(x1,x2) & E(x2,x3) & E(x1,x3)"),
    ("theory henson 4\nparam m0, m1, m2\nfact E(m0,m1)\nfact E(m1,m2)\n", 5, "x1 = m0 & x2 = m1 & E(x3,x4) & x5 != m2"),
    ("theory henson 3\n", 5, "E(x1,x2) & E(x3,x4)"),
    ("theory henson 3\n", 6, "(E(x1,x2) | E(x2,x3)) & (E(x4,x5) | x5 = x6)"),
    ("theory henson 3\nparam m0, m1\nfact E(m0,m1)\n", 4, "x1 = m0 & x2 = m1 & E(x1,x3)"),
    ("theory henson 3\nparam m0, m1\nfact E(m0,m1)\n", 3, "x1 = m0 & x2 = m1"),
    ("theory henson 3\nparam m0, m1\nfact E(m0,m1)\n", 5, "!E(x1,x2) & x3 = x4 & E(x4,x5)"),
    ("theory henson 4\nparam m0, m1, m2\nfact E(m0,m1)\nfact E(m1,m2)\n", 6, "E(x1,x2) & E(x3,x4) & E(x5,x6) & E(x1,x3)"),
    ("theory henson 3\n", 4, "x1 = x2 & x2 = x3 & x3 = x4"),
    ("theory henson 3\nparam m0, m1\nfact E(m0,m1)\n", 6, "E(x1,x2) & E(x2,x3) & E(x3,x4) & E(x4,x5) & E(x5,x6) & E(x6,x1)"),
    ("theory henson 4\nparam m0, m1, m2\nfact E(m0,m1)\nfact E(m1,m2)\n", 5, "x1 = m1 & E(x1,x2) & E(x2,x3) | x4 = m2 & x5 = m0"),
    ("theory henson 3\nparam m0, m1\nfact E(m0,m1)\n", 4, "E(x1,m0) & E(x2,m0) & E(x3,m1) & x4 = x1"),
    ("theory henson 3\n", 3, "x1 != x2 & !E(x1,x3)"),
];

struct Realization {
    consistent: bool,
    pinned: BTreeSet<usize>,
    edges: BTreeSet<(usize, usize)>,
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut i = i;
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Reads off pinned variables and forced edges from the least realization:
/// only the stated equalities are identified and only stated (or fragment)
/// edges are drawn.
fn least_realization(f: &Fragment, s: usize, n: usize, lits: &[(bool, Atom)]) -> Realization {
    let params = f.names_of_sort(keisler::formula::Sort::Vertex);
    let mut names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    names.extend(params.iter().cloned());
    let idx = |t: &Term| names.iter().position(|m| Some(m.as_str()) == t.name()).expect("known name");
    let size = names.len();
    let mut parent: Vec<usize> = (0..size).collect();
    for (pos, a) in lits {
        if let (true, Atom::Eq(u, v)) = (pos, a) {
            let (ru, rv) = (find(&mut parent, idx(u)), find(&mut parent, idx(v)));
            parent[ru] = rv;
        }
    }
    let class: Vec<usize> = (0..size).map(|i| find(&mut parent, i)).collect();
    let mut consistent = (n..size).all(|i| (n..size).all(|j| i == j || class[i] != class[j]));
    let mut adj = BTreeSet::new();
    let link = |a: usize, b: usize, adj: &mut BTreeSet<(usize, usize)>| {
        adj.insert((a.min(b), a.max(b)));
        a != b
    };
    for i in n..size {
        for j in n..size {
            let (vi, vj) = (f.vertex_of(&names[i]).unwrap(), f.vertex_of(&names[j]).unwrap());
            if i < j && f.rel.holds_e(vi, vj) {
                consistent &= link(class[i], class[j], &mut adj);
            }
        }
    }
    for (pos, a) in lits {
        if let (true, Atom::E(u, v)) = (pos, a) {
            consistent &= link(class[idx(u)], class[idx(v)], &mut adj);
        }
    }
    for (pos, a) in lits {
        match (pos, a) {
            (false, Atom::Eq(u, v)) => consistent &= class[idx(u)] != class[idx(v)],
            (false, Atom::E(u, v)) => {
                let (cu, cv) = (class[idx(u)], class[idx(v)]);
                consistent &= !adj.contains(&(cu.min(cv), cu.max(cv)));
            }
            _ => {}
        }
    }
    let roots: Vec<usize> = (0..size).filter(|&i| class[i] == i).collect();
    for mask in 0u32..1 << roots.len() {
        if mask.count_ones() as usize != s {
            continue;
        }
        let members: Vec<usize> = (0..roots.len()).filter(|k| mask >> k & 1 == 1).map(|k| roots[k]).collect();
        let clique = members.iter().all(|&a| members.iter().all(|&b| a >= b || adj.contains(&(a, b))));
        consistent &= !clique;
    }
    let pinned = (0..n).filter(|&i| (n..size).any(|j| class[j] == class[i])).map(|i| i + 1).collect();
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            let (ci, cj) = (class[i], class[j]);
            if adj.contains(&(ci.min(cj), ci.max(cj))) {
                edges.insert((i + 1, j + 1));
            }
        }
    }
    Realization { consistent, pinned, edges }
}

fn max_good(n: usize, r: &Realization) -> usize {
    (0u32..1 << n)
        .filter(|set| {
            let has = |i: usize| set >> (i - 1) & 1 == 1;
            r.pinned.iter().all(|&i| !has(i)) && r.edges.iter().all(|&(i, j)| !(has(i) && has(j)))
        })
        .map(|set| set.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

fn henson() -> Result<Check, Error> {
    let mut chk = Check::default();
    let eps = q(1, 4);
    for (case, (text, n, theta)) in HENSON_CASES.iter().enumerate() {
        let f = frag(text);
        let TheoryId::Henson(s) = f.theory else { unreachable!() };
        let phi = f.parse_formula(theta)?;
        let res = run_henson_tgood(&f, &phi, *n, &eps)?;
        chk.expect(res.pass, || format!("case {case} `{theta}`: verdict"));
        let dnf = to_dnf_capped(&phi, 4096)?;
        for (t, conj) in dnf.disjuncts.iter().enumerate() {
            let lits: Vec<(bool, Atom)> = conj.iter().map(|l| (l.positive, l.atom.clone())).collect();
            let real = least_realization(&f, s, *n, &lits);
            let row = res.get(&format!("t{t}.max_good"));
            if !real.consistent {
                chk.expect(row.is_none(), || format!("case {case} t{t}: inconsistent disjunct reported"));
                continue;
            }
            let size = max_good(*n, &real);
            chk.same(row.unwrap_or(&q(-1, 1)), &q(size as i64, 1), || format!("case {case} `{theta}` t{t} max_good"));
            if size > 0 && q(size as i64, 1) >= &eps * q(*n as i64, 1) {
                let av = res.get(&format!("t{t}.av")).cloned().unwrap_or_else(|| q(-1, 1));
                let bound = q(size as i64, *n as i64);
                chk.same(res.get(&format!("t{t}.bound")).unwrap_or(&q(-1, 1)), &bound, || format!("case {case} t{t} bound"));
                chk.expect(av >= bound, || format!("case {case} t{t}: Av {av} below {bound}"));
                chk.same(res.get(&format!("t{t}.p_E")).unwrap_or(&q(-1, 1)), &q(0, 1), || format!("case {case} t{t} p_E"));
            }
        }
    }
    Ok(chk)
}

// ---------------------------------------------------------------------------
// 12. Independent-family measures

fn conj(members: &[String], pos: &[usize], neg: &[usize]) -> String {
    let mut parts: Vec<String> = pos.iter().map(|&i| members[i].clone()).collect();
    parts.extend(neg.iter().map(|&j| format!("!{}", members[j])));
    if parts.is_empty() {
        "x = x".into()
    } else {
        format!("({})", parts.join(" & "))
    }
}

fn independent_family() -> Result<Check, Error> {
    let mut rng = rng(12);
    let mut chk = Check::default();
    let x = vars(&["x"]);
    let tr = frag("theory tr\nparam a, b\nfact R(a,b,a)\n");
    let pq = frag("theory thalf-inf\nparam b0 : Q = 0:[0,1/2)\nparam b1 : Q = 1:[1/4,1/2)\nparam b2 : Q = 2:[1/3,1)\nparam b3 : Q = 3:[0,1/8)+[1/2,1)\n");
    let tr_members = ["R(x,a,a)", "R(x,a,b)", "R(x,b,a)", "R(x,b,b)", "R(x,x,a)"];
    let pq_members = ["x sqin b0", "x sqin b1", "x sqin b2", "x sqin b3"];
    for case in 0..200 {
        let (f, pool) = if case % 2 == 0 { (&tr, &tr_members[..]) } else { (&pq, &pq_members[..]) };
        let k = rng.gen_range(2..=4);
        let members: Vec<String> = pool.choose_multiple(&mut rng, k).map(|s| s.to_string()).collect();
        let values: Vec<Rational> = (0..k).map(|_| q(rng.gen_range(0..=12), 12)).collect();
        let spec = IndependentFamilySpec {
            var: "x".into(),
            family: members.iter().map(|m| f.parse_formula(m)).collect::<Result<_, _>>()?,
            f: values.clone(),
        };
        let m = independent_family_measure(spec.clone(), f)?;
        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(&mut rng);
        let cut_x = rng.gen_range(0..=k);
        let cut_y = rng.gen_range(cut_x..=k);
        let (xs, ys, rest) = (&order[..cut_x], &order[cut_x..cut_y], &order[cut_y..]);
        let mut want = Rational::one();
        for &i in xs {
            want *= &values[i];
        }
        for &j in ys {
            want *= Rational::one() - &values[j];
        }
        let plain = conj(&members, xs, ys);
        // the same event refined over the remaining members
        let mut cells = Vec::new();
        for mask in 0u32..1 << rest.len() {
            let mut pos = xs.to_vec();
            let mut neg = ys.to_vec();
            for (b, &i) in rest.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    pos.push(i);
                } else {
                    neg.push(i);
                }
            }
            cells.push(conj(&members, &pos, &neg));
        }
        let refined = cells.join(" | ");
        let mut outside: Vec<String> = xs.iter().map(|&i| format!("!{}", members[i])).collect();
        outside.extend(ys.iter().map(|&j| members[j].clone()));
        let dual = if outside.is_empty() { "x = x".to_string() } else { format!("!({})", outside.join(" | ")) };
        let mut vals = Vec::new();
        // `x = x` is outside the family, which sends evaluation through witness search
        let guarded = [format!("{plain} & x = x"), format!("{dual} & x = x")];
        for text in [&plain, &refined, &dual, &guarded[0], &guarded[1]] {
            vals.push(m.eval(&x, &f.parse_formula(text)?, f)?);
        }
        let nf = normal_form_value(&spec, xs, ys);
        chk.expect(vals.iter().all(|v| *v == want) && nf == want, || {
            format!("case {case}: {plain} / {refined} / {dual} gave {vals:?} and {nf}, want {want}")
        });
    }
    Ok(chk)
}

// ---------------------------------------------------------------------------

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "coin-flip law", budget: Some(BUDGET_COIN_FLIP), run: coin_flip_law },
    Criterion { id: 2, name: "product against double sum", budget: Some(BUDGET_PRODUCT_ORACLE), run: product_oracle },
    Criterion { id: 3, name: "associativity of definable triples", budget: None, run: associativity },
    Criterion { id: 4, name: "ternary associativity gap", budget: Some(BUDGET_TERNARY_GAP), run: ternary_gap },
    Criterion { id: 5, name: "non-commutation", budget: Some(BUDGET_NOCOM), run: nocom },
    Criterion { id: 6, name: "half-measure separation", budget: None, run: thalf },
    Criterion { id: 7, name: "q_PQ approximations and order property", budget: None, run: qpq },
    Criterion { id: 8, name: "quantifier elimination soundness", budget: Some(BUDGET_QE), run: qe_soundness },
    Criterion { id: 9, name: "concentration bounds", budget: None, run: bounds },
    Criterion { id: 10, name: "convex decomposition of powers", budget: None, run: fim_convexity },
    Criterion { id: 11, name: "Henson good sets", budget: None, run: henson },
    Criterion { id: 12, name: "independent-family normal forms", budget: None, run: independent_family },
];

#[test]
fn acceptance() {
    let mut failed = BTreeMap::new();
    for c in CRITERIA {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let mut problems = match outcome {
            Ok(chk) if chk.cases == 0 => vec!["no cases ran".to_string()],
            Ok(chk) => chk.failures,
            Err(e) => vec![format!("error: {e}")],
        };
        if let Some(b) = c.budget {
            if took > b {
                problems.push(format!("took {took:?}, budget {b:?}"));
            }
        }
        let verdict = if problems.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {}: {verdict} {} ({} ms)", c.id, c.name, took.as_millis());
        for p in problems.iter().take(5) {
            println!("    {p}");
        }
        if !problems.is_empty() {
            failed.insert(c.id, problems.len());
        }
    }
    assert!(failed.is_empty(), "failing criteria (id -> failures): {failed:?}");
}
