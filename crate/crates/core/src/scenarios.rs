//! Scripted reproductions of the counterexamples and positive checks.
//!
//! Every value in a [`ScenarioResult`] is recomputed from the library on each
//! run; nothing is cached.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use crate::approx::{av_error, indexed_vars};
use crate::error::{pre, Error, Result};
use crate::formula::{to_dnf_capped, Atom, Formula, Sort, Term};
use crate::measures::{GlobalType, Measure, Point};
use crate::morley::{self, name_for, product_eval};
use crate::scalar::{fmt_rat, frac, int, pow2_neg, Exact};
use crate::theories::halfset::{cover_points, HalfSet};
use crate::theories::{realize_in_standard_model, Env, Fragment, IntervalUnion, QElem, TheoryId, Value};
use crate::types::{enumerate_types, QfType};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioResult {
    pub name: String,
    pub params: Vec<(String, String)>,
    pub rows: Vec<(String, Rational)>,
    pub pass: bool,
}

impl ScenarioResult {
    fn new(name: &str, params: Vec<(&str, String)>) -> ScenarioResult {
        ScenarioResult {
            name: name.to_string(),
            params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            rows: Vec::new(),
            pass: true,
        }
    }

    fn row(&mut self, label: impl Into<String>, v: Rational) {
        self.rows.push((label.into(), v));
    }

    /// First row with the given label.
    pub fn get(&self, label: &str) -> Option<&Rational> {
        self.rows.iter().find(|(l, _)| l == label).map(|(_, v)| v)
    }
}

fn vars(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn vertex(name: &str) -> Term {
    Term::param(name, Sort::Vertex)
}

// ---------------------------------------------------------------------------
// Random ternary relation

/// Number of `R`-instances in one free variable over a base of size `m`.
pub fn one_variable_instances(m: usize) -> usize {
    3 * m * m + 3 * m + 1
}

/// The `R`-atoms mentioning `z` with the other places from `base`, in
/// lexicographic order of positions (`z` first, then the base).
pub fn ternary_atoms(base: &[String], z: &str) -> Vec<Atom> {
    let mut slots = vec![Term::var(z, Sort::Vertex)];
    slots.extend(base.iter().map(|b| vertex(b)));
    let mut out = Vec::new();
    for i in 0..slots.len() {
        for j in 0..slots.len() {
            for k in 0..slots.len() {
                if i == 0 || j == 0 || k == 0 {
                    out.push(Atom::R(slots[i].clone(), slots[j].clone(), slots[k].clone()));
                }
            }
        }
    }
    out
}

/// The non-realized one-type over the base whose `k`-th atom holds iff bit
/// `k` of `mask` is set.
pub fn mask_type(atoms: &[Atom], base: &[String], z: &str, mask: u64) -> Formula {
    let mut parts: Vec<Formula> = atoms
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let f = Formula::Atom(a.clone());
            if mask >> k & 1 == 1 {
                f
            } else {
                Formula::not(f)
            }
        })
        .collect();
    for b in base {
        parts.push(Formula::not(Formula::Atom(Atom::Eq(Term::var(z, Sort::Vertex), vertex(b)))));
    }
    Formula::and(parts)
}

fn ternary_base(m: usize, witnesses: usize) -> Result<(Fragment, Vec<String>, Vec<String>)> {
    let mut frag = Fragment::new(TheoryId::TR);
    let base: Vec<String> = (0..m).map(|i| format!("b{i}")).collect();
    let wits: Vec<String> = (0..witnesses).map(|i| format!("a{i}")).collect();
    for n in base.iter().chain(&wits) {
        frag.add_vertex(n)?;
    }
    Ok((frag, base, wits))
}

/// A formula in the atoms of `atoms` (and equalities of `z` with the base,
/// false for non-realized types) as bit patterns `(care, value)`.
fn compile_masks(f: &Formula, atoms: &[Atom], z: &str) -> Result<Vec<(u64, u64)>> {
    let index: BTreeMap<&Atom, usize> = atoms.iter().enumerate().map(|(k, a)| (a, k)).collect();
    let g = f.partial_eval(&mut |a| match a {
        Atom::Eq(..) if a.vars().contains(z) => Some(false),
        _ => None,
    });
    let dnf = to_dnf_capped(&g, usize::MAX)?;
    let mut out = Vec::new();
    for conj in &dnf.disjuncts {
        let (mut care, mut val) = (0u64, 0u64);
        for lit in conj {
            let k = *index
                .get(&lit.atom)
                .ok_or_else(|| Error::Unsupported(format!("atom `{}` outside the base instances", lit.atom)))?;
            care |= 1 << k;
            if lit.positive {
                val |= 1 << k;
            }
        }
        out.push((care, val));
    }
    Ok(out)
}

/// Mass under the fair coin-flip measure of the non-realized types
/// satisfying the compiled formula, by walking all `2^N` masks.
fn enumerated_mass(patterns: &[(u64, u64)], n_atoms: usize) -> Rational {
    let total: u64 = 1 << n_atoms;
    let hits = (0..total).filter(|s| patterns.iter().any(|(c, v)| s & c == *v)).count();
    Rational::from_integer((hits as i64).into()) * pow2_neg(n_atoms)
}

/// The associativity gap in the random ternary relation at base size `m`,
/// with `κ` explicit indices.
///
/// `η₁ = ((p⊗q)⊗λ)(R(x,y,z))` is computed with `Z` the whole type space over
/// the base: the fiber of `p⊗q` is then the indicator of `Z`, so `η₁` is the
/// λ-mass of all one-types. `η₂` is `(p⊗(q⊗λ))(R(x,y,z))` with the `κ`
/// witnesses named in the fragment, `Σ_{i<κ} λ(r_i) = κ·2^{-N}`.
pub fn run_ternary_gap(m: usize, kappa: usize) -> Result<ScenarioResult> {
    if m == 0 || kappa == 0 {
        return pre("ternary gap needs m >= 1 and kappa >= 1");
    }
    let n_atoms = one_variable_instances(m);
    if n_atoms >= 63 {
        return Err(Error::Limit(format!("{n_atoms} instances do not fit a bit mask")));
    }
    if kappa as u64 > 1u64 << n_atoms {
        return pre(format!("only 2^{n_atoms} non-realized one-types over a base of size {m}"));
    }
    let mut res = ScenarioResult::new("ternary-gap", vec![("m", m.to_string()), ("kappa", kappa.to_string())]);
    let (frag, base, wits) = ternary_base(m, kappa)?;
    let atoms = ternary_atoms(&base, "z");
    if atoms.len() != n_atoms {
        return Err(Error::Inconsistent(format!("{} instances, expected {n_atoms}", atoms.len())));
    }
    res.row("instances", int(n_atoms as i64));

    let lambda = Measure::coin_flip();
    let z = vars(&["z"]);

    // η₁: λ-mass of every one-type over the base.
    let mut eta1 = enumerated_mass(&[(0, 0)], n_atoms);
    for b in &base {
        let eq = Formula::Atom(Atom::Eq(Term::var("z", Sort::Vertex), vertex(b)));
        eta1 += lambda.eval(&z, &eq, &frag)?;
    }
    res.row("eta1", eta1.clone());
    if n_atoms <= 7 {
        let lib = eta1_full(m)?;
        res.pass &= lib == eta1;
        res.row("eta1_library", lib);
    }

    // η₂ through the product machinery.
    let taus: Vec<(String, Formula)> =
        wits.iter().enumerate().map(|(i, a)| (a.clone(), mask_type(&atoms, &base, "z", i as u64))).collect();
    let p = Measure::Dirac(Point::Type(GlobalType::TernaryP { witnesses: wits.clone() }));
    let q = Measure::Dirac(Point::Type(GlobalType::TernaryQ { var: "z".into(), pairs: taus }));
    let r = Formula::Atom(Atom::R(Term::var("x", Sort::Vertex), Term::var("y", Sort::Vertex), Term::var("z", Sort::Vertex)));
    let eta2 = Measure::product(p.clone(), Measure::product(q.clone(), lambda.clone())).eval(&vars(&["x", "y", "z"]), &r, &frag)?;
    res.row("eta2", eta2.clone());

    // The same set of z-types, read off the definitions and counted mask by mask.
    let defs = morley::definition(&Measure::product(p, q), &vars(&["x", "y"]), &r, &frag)?
        .ok_or_else(|| Error::NoStrategy("definition of p⊗q".into()))?;
    let chi = Formula::or(defs.into_iter().filter(|(w, _)| !w.is_zero()).map(|(_, g)| g).collect());
    let chi = chi.partial_eval(&mut |a| if a.vars().is_empty() { frag.eval_atom(a, &Env::new()).ok() } else { None });
    let eta2_enum = enumerated_mass(&compile_masks(&chi, &atoms, "z")?, n_atoms);
    res.row("eta2_enumerated", eta2_enum.clone());
    let formula = int(kappa as i64) * pow2_neg(n_atoms);
    res.row("eta2_formula", formula.clone());
    res.pass &= eta1.is_one() && eta2 == eta2_enum && eta2 == formula;
    Ok(res)
}

/// `((p⊗q)⊗λ)(R(x,y,z))` through the library with one witness per complete
/// one-type over the base, realized ones included.
fn eta1_full(m: usize) -> Result<Rational> {
    let base_frag = ternary_base(m, 0)?.0;
    let space = enumerate_types(&base_frag, &vars(&["z"]))?;
    let (frag, base, wits) = ternary_base(m, space.types.len())?;
    let _ = base;
    let pairs: Vec<(String, Formula)> =
        wits.iter().zip(&space.types).map(|(a, t)| (a.clone(), t.to_formula(&base_frag))).collect();
    let p = Measure::Dirac(Point::Type(GlobalType::TernaryP { witnesses: wits.clone() }));
    let q = Measure::Dirac(Point::Type(GlobalType::TernaryQ { var: "z".into(), pairs }));
    let r = Formula::Atom(Atom::R(Term::var("x", Sort::Vertex), Term::var("y", Sort::Vertex), Term::var("z", Sort::Vertex)));
    Measure::product(Measure::product(p, q), Measure::coin_flip()).eval(&vars(&["x", "y", "z"]), &r, &frag)
}

/// Checks `R(x,y,c) ∈ p⊗q ⟺ tp(c/B) ∈ Z` for a representative `c` of every
/// complete one-type over a base of size `m`. `z` indexes the enumerated
/// type space over the base.
pub fn run_pq_property_ii(m: usize, z: &[usize]) -> Result<ScenarioResult> {
    if m == 0 {
        return pre("property (ii) needs a nonempty base");
    }
    let base_frag = ternary_base(m, 0)?.0;
    let space = enumerate_types(&base_frag, &vars(&["z"]))?;
    let chosen: BTreeSet<usize> = z.iter().copied().collect();
    if let Some(i) = chosen.iter().find(|&&i| i >= space.types.len()) {
        return pre(format!("type index {i} out of range ({} types)", space.types.len()));
    }
    let zs: Vec<&QfType> = chosen.iter().map(|&i| &space.types[i]).collect();
    let (frag, _, wits) = ternary_base(m, zs.len())?;
    let pairs: Vec<(String, Formula)> =
        wits.iter().zip(&zs).map(|(a, t)| (a.clone(), t.to_formula(&base_frag))).collect();
    let p = GlobalType::TernaryP { witnesses: wits.clone() };
    let q = GlobalType::TernaryQ { var: "z".into(), pairs };
    let pq = Measure::product(Measure::Dirac(Point::Type(p.clone())), Measure::Dirac(Point::Type(q.clone())));

    let mut res = ScenarioResult::new(
        "pq-property-ii",
        vec![("m", m.to_string()), ("z", chosen.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","))],
    );
    let mut agree = 0i64;
    for (i, t) in space.types.iter().enumerate() {
        let Some((mut g, env)) = realize_in_standard_model(&frag, &t.to_formula(&base_frag))? else {
            return Err(Error::Inconsistent(format!("type {i} has no realization")));
        };
        let c = env["z"].clone();
        let cname = name_for(&mut g, &c)?;
        let r = Formula::Atom(Atom::R(Term::var("x", Sort::Vertex), Term::var("y", Sort::Vertex), vertex(&cname)));
        let via_product = pq.eval(&vars(&["x", "y"]), &r, &g)?;
        // realize q over the fragment with c, then p over that
        let (g1, b) = q.realize(&g)?;
        let (g2, a) = p.realize(&g1)?;
        let (Value::Vertex(a), Value::Vertex(b), Value::Vertex(cv)) = (a, b, c) else {
            return Err(Error::Inconsistent("non-vertex realization".into()));
        };
        let via_realization = g2.rel.holds_r(a, b, cv);
        let expected = chosen.contains(&i);
        let ok = via_product.is_one() == expected && via_realization == expected;
        res.pass &= ok;
        agree += ok as i64;
    }
    res.row("types", int(space.types.len() as i64));
    res.row("in_z", int(chosen.len() as i64));
    res.row("verified", int(agree));
    Ok(res)
}

// ---------------------------------------------------------------------------
// Half-measure theories

/// `(μ⊗q)(x⊑y)` and `(q⊗μ)(x⊑y)` for the cube measure `μ` and the covering
/// type `q` over the empty fragment of `THalfInf`.
pub fn run_nocom() -> Result<ScenarioResult> {
    let frag = Fragment::new(TheoryId::THalfInf);
    let mu = Measure::CubeLebesgue;
    let cover = GlobalType::Covering;
    let q = Measure::Dirac(Point::Type(cover.clone()));
    let phi = frag.parse_formula("x sqin y")?;
    let (x, y) = (vars(&["x"]), vars(&["y"]));
    let mut res = ScenarioResult::new("nocom", vec![]);
    let (_, b) = cover.realize(&frag)?;
    let Value::Q(b) = b else { return Err(Error::Inconsistent("covering type realized outside Q".into())) };
    let left = product_eval(&mu, &x, &q, &y, &phi, &frag)?;
    let right = product_eval(&q, &y, &mu, &x, &phi, &frag)?;
    res.row("(mu*q)(x sqin y)", left.clone());
    res.row("(q*mu)(x sqin y)", right.clone());
    res.pass = left == frac(1, 2) && right.is_one() && b.ell() == frac(1, 2);
    Ok(res)
}

/// A point of `[0,1)` in at most half of the sets: the interval endpoint
/// (or `0`) with the fewest hits, earliest on ties. Returns the point and
/// its hit count.
pub fn thalf_nonfam_certificate(bs: &[HalfSet]) -> Result<(Rational, usize)> {
    if bs.is_empty() {
        return pre("no half sets given");
    }
    let mut cands: BTreeSet<Rational> = BTreeSet::new();
    cands.insert(Rational::zero());
    for b in bs {
        cands.extend(b.set().endpoints().into_iter().filter(|e| *e < Rational::one()));
    }
    let best = cands
        .into_iter()
        .map(|a| {
            let hits = bs.iter().filter(|b| b.contains(&a)).count();
            (hits, a)
        })
        .min_by(|(h1, a1), (h2, a2)| h1.cmp(h2).then(a1.cmp(a2)))
        .expect("0 is a candidate");
    if 2 * best.0 > bs.len() {
        return Err(Error::Inconsistent(format!("every endpoint is in more than half of the {} sets", bs.len())));
    }
    Ok((best.1, best.0))
}

pub fn run_thalf_nonfam(bs: &[HalfSet]) -> Result<ScenarioResult> {
    let (a, hits) = thalf_nonfam_certificate(bs)?;
    let mut res = ScenarioResult::new(
        "thalf-nonfam",
        vec![("b", bs.iter().map(|b| b.set().to_string()).collect::<Vec<_>>().join(" "))],
    );
    let n = bs.len();
    res.row("a", a);
    res.row("hits", int(hits as i64));
    res.row("hit_fraction", frac(hits as i64, n as i64));
    res.pass = 2 * hits <= n;
    Ok(res)
}

/// A union of exactly `n = |points|` members of `I_{2n}` containing every
/// point.
pub fn thalf_satisfiability_witness(points: &[Rational]) -> Result<HalfSet> {
    if points.is_empty() {
        return pre("at least one point is required");
    }
    let b = cover_points(points, points.len())?;
    if let Some(a) = points.iter().find(|a| !b.contains(a)) {
        return Err(Error::Inconsistent(format!("cover misses {}", fmt_rat(a))));
    }
    Ok(b)
}

pub fn run_thalf_satisfiability(points: &[Rational]) -> Result<ScenarioResult> {
    let b = thalf_satisfiability_witness(points)?;
    let mut res = ScenarioResult::new(
        "thalf-satisfiability",
        vec![("points", points.iter().map(fmt_rat).collect::<Vec<_>>().join(",")), ("b", b.set().to_string())],
    );
    for (i, (lo, hi)) in b.set().intervals().iter().enumerate() {
        res.row(format!("b{i}.lo"), lo.clone());
        res.row(format!("b{i}.hi"), hi.clone());
    }
    res.row("measure", b.set().measure());
    res.pass = points.iter().all(|a| b.contains(a)) && b.set().measure() == frac(1, 2);
    Ok(res)
}

/// The tuple `c̄_n = (d_{i,j}ᶜ)_{i,j<n}` with `d_{i,j} = (i, [j/n,(j+1)/n))`.
pub fn qpq_tuple(n: usize) -> Result<Vec<QElem>> {
    if n < 2 {
        return pre("c̄_n needs n >= 2 (d_{0,0} would be the whole interval)");
    }
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let d = IntervalUnion::interval(frac(j as i64, n as i64), frac(j as i64 + 1, n as i64))?;
            out.push(QElem::pair(i, d.complement()));
        }
    }
    Ok(out)
}

/// `sup_a |v − Av(c̄)(a ⊑ y)|` over all points `a`, where `v` is the common
/// value `μ(a ⊑ y)`. Membership in each `c_k` reads one coordinate, so the
/// extreme hit counts are sums of per-coordinate extremes over the elementary
/// intervals of that coordinate.
pub fn membership_av_error(v: &Rational, cbar: &[QElem]) -> Result<Rational> {
    if cbar.is_empty() {
        return pre("Av of an empty tuple");
    }
    let mut always = 0i64;
    let mut by_coord: BTreeMap<usize, Vec<&IntervalUnion<Rational>>> = BTreeMap::new();
    for c in cbar {
        match c {
            QElem::Top => always += 1,
            QElem::Bot => {}
            QElem::Pair(n, x) => by_coord.entry(*n).or_default().push(x),
        }
    }
    let (mut lo, mut hi) = (always, always);
    for sets in by_coord.values() {
        let breaks = sets.iter().flat_map(|x| x.endpoints());
        let cells = crate::theories::intervals::elementary(breaks);
        let counts: Vec<i64> =
            cells.iter().map(|(a, _)| sets.iter().filter(|x| x.contains(a)).count() as i64).collect();
        lo += counts.iter().min().copied().unwrap_or(0);
        hi += counts.iter().max().copied().unwrap_or(0);
    }
    let n = Rational::from_int(cbar.len() as i64);
    let e1 = (v - Rational::from_int(lo) / &n).abs();
    let e2 = (v - Rational::from_int(hi) / &n).abs();
    Ok(e1.max(e2))
}

/// Atomic formulas (in the measure variable `y`) checked against `c̄_n` in the
/// fam part of the q_PQ suite, with their parameter counts.
pub const QPQ_ATOMIC: [(&str, usize); 6] = [
    ("x sqin y", 1),
    ("y = z1", 1),
    ("y sim z1", 1),
    ("(y meet z1) = bot", 1),
    ("x sqin (y join z1)", 2),
    ("(y meet z1) sim z2", 2),
];

/// The fam/non-fim witnesses for the PQ reduct of the covering type:
/// Av-errors of `c̄_n` and the order property on `k` realizations.
pub fn run_qpq_suite(n: usize, k: usize) -> Result<ScenarioResult> {
    if k == 0 {
        return pre("order property needs k >= 1");
    }
    if k > 16 {
        return Err(Error::Limit("k > 16 would need more than 65536 witnesses".into()));
    }
    let mut res = ScenarioResult::new("qpq", vec![("n", n.to_string()), ("k", k.to_string())]);
    let cbar = qpq_tuple(n)?;
    let frag = Fragment::new(TheoryId::THalfInfPQ);
    let q = Measure::Dirac(Point::Type(GlobalType::Covering));

    // (a) fam: x ⊑ y exactly at every n, other atoms through the generic search at small n
    let mut g = frag.clone();
    let a = g.registry.point_in(&BTreeMap::new())?;
    g.add_param("a", Value::Point(a))?;
    let v = q.eval(&vars(&["y"]), &g.parse_formula("a sqin y")?, &g)?;
    let err = membership_av_error(&v, &cbar)?;
    res.row("av_error(x sqin y)", err.clone());
    res.pass &= err == frac(1, n as i64);
    if n <= 3 {
        let abar: Vec<Value> = cbar.iter().cloned().map(Value::Q).collect();
        for (text, params) in QPQ_ATOMIC {
            let phi = frag.parse_formula(text)?;
            let e = av_error(&q, "y", &abar, &phi, &frag)?.value;
            res.pass &= e <= frac(params as i64, n as i64);
            res.row(format!("generic_av_error({text})"), e);
        }
    }

    // (b) non-fim: a Morley sequence of q and all membership patterns
    let mut seq = frag.clone();
    let mut bs = Vec::new();
    for i in 0..k {
        let (g, b) = GlobalType::Covering.realize(&seq)?;
        seq = g;
        seq.add_param(&format!("b{i}"), b.clone())?;
        let Value::Q(QElem::Pair(c, x)) = b else {
            return Err(Error::Inconsistent("covering type realized outside the copies".into()));
        };
        bs.push((c, x));
    }
    let distinct_classes = bs.iter().map(|(c, _)| *c).collect::<BTreeSet<_>>().len();
    res.row("pairwise_nonsim", int((distinct_classes == k) as i64));
    res.pass &= distinct_classes == k;
    let mut verified = 0i64;
    for set in 0u32..1 << k {
        let cells: BTreeMap<usize, IntervalUnion<Rational>> = bs
            .iter()
            .enumerate()
            .map(|(i, (c, x))| (*c, if set >> i & 1 == 1 { x.clone() } else { x.complement() }))
            .collect();
        let mut h = seq.clone();
        let p = h.registry.point_in(&cells)?;
        h.add_param("aI", Value::Point(p.clone()))?;
        let mut ok = true;
        for (i, (c, x)) in bs.iter().enumerate() {
            let want = set >> i & 1 == 1;
            let by_eval = h.holds(&h.parse_formula(&format!("aI sqin b{i}"))?)?;
            let by_coord = x.contains(&p.coord(*c));
            ok &= by_eval == want && by_coord == want;
        }
        verified += ok as i64;
    }
    res.row("patterns", int(1i64 << k));
    res.row("patterns_verified", int(verified));
    res.pass &= verified == 1i64 << k;
    Ok(res)
}

// ---------------------------------------------------------------------------
// Henson graphs

/// Good-set analysis of one disjunct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoodSets {
    /// Indices (1-based) forced equal to a fragment element.
    pub pinned: BTreeSet<usize>,
    /// Pairs (1-based, `i < j`) forced adjacent.
    pub edges: BTreeSet<(usize, usize)>,
    /// A largest good set, lexicographically first among those.
    pub best: Vec<usize>,
}

/// Whether `conj` proves `goal` over the fragment.
fn proves(frag: &Fragment, conj: &Formula, goal: Formula) -> Result<bool> {
    Ok(realize_in_standard_model(frag, &Formula::and(vec![conj.clone(), Formula::not(goal)]))?.is_none())
}

pub fn good_sets(frag: &Fragment, conj: &Formula, n: usize) -> Result<GoodSets> {
    if n > 20 {
        return Err(Error::Limit("good-set search beyond 20 variables".into()));
    }
    let xs = indexed_vars(n);
    let xv = |i: usize| Term::var(&xs[i - 1], Sort::Vertex);
    let ms = frag.names_of_sort(Sort::Vertex);
    let mut pinned = BTreeSet::new();
    for i in 1..=n {
        for m in &ms {
            if proves(frag, conj, Formula::Atom(Atom::Eq(xv(i), vertex(m))))? {
                pinned.insert(i);
                break;
            }
        }
    }
    let mut edges = BTreeSet::new();
    for i in 1..=n {
        for j in i + 1..=n {
            if proves(frag, conj, Formula::Atom(Atom::E(xv(i), xv(j))))? {
                edges.insert((i, j));
            }
        }
    }
    let mut best: Vec<usize> = Vec::new();
    for set in 0u32..1 << n {
        let members: Vec<usize> = (1..=n).filter(|i| set >> (i - 1) & 1 == 1).collect();
        if members.len() < best.len() || (members.len() == best.len() && !best.is_empty() && members >= best) {
            continue;
        }
        let good = members.iter().all(|i| !pinned.contains(i))
            && edges.iter().all(|(i, j)| !(members.contains(i) && members.contains(j)));
        if good {
            best = members;
        }
    }
    Ok(GoodSets { pinned, edges, best })
}

/// The good-set dichotomy for `θ(x1..xn)` over a Henson fragment: per DNF
/// disjunct the largest good set, and for every disjunct with a good set of
/// size `≥ εn` a witness `ā ⊨ θ` and `b` with `Av(ā)(E(x,b)) ≥ |X|/n` while
/// `p_E(E(x,b)) = 0`.
pub fn run_henson_tgood(frag: &Fragment, theta: &Formula, n: usize, eps: &Rational) -> Result<ScenarioResult> {
    let TheoryId::Henson(s) = frag.theory else {
        return pre(format!("good sets need a Henson fragment, not {}", frag.theory));
    };
    if n == 0 {
        return pre("n >= 1 variables required");
    }
    let xs = indexed_vars(n);
    if let Some(v) = theta.free_vars().keys().find(|v| !xs.contains(v)) {
        return pre(format!("free variable `{v}` is not among x1..x{n}"));
    }
    let dnf = to_dnf_capped(theta, 4096)?;
    let mut res = ScenarioResult::new(
        "henson-tgood",
        vec![("s", s.to_string()), ("theta", theta.to_string()), ("n", n.to_string()), ("eps", fmt_rat(eps))],
    );
    let pe = Measure::Dirac(Point::Type(GlobalType::NonAdjacent));
    let mut consistent = 0;
    for (t, lits) in dnf.disjuncts.iter().enumerate() {
        let conj = Formula::and(lits.iter().map(|l| l.to_formula()).collect());
        if realize_in_standard_model(frag, &conj)?.is_none() {
            continue;
        }
        consistent += 1;
        let gs = good_sets(frag, &conj, n)?;
        let size = gs.best.len();
        res.row(format!("t{t}.max_good"), int(size as i64));
        if Rational::from_int(size as i64) < eps * Rational::from_int(n as i64) || size == 0 {
            continue;
        }
        let xv = |i: usize| Term::var(&xs[i - 1], Sort::Vertex);
        let mut parts = vec![conj.clone()];
        for &i in &gs.best {
            for m in frag.names_of_sort(Sort::Vertex) {
                parts.push(Formula::not(Formula::Atom(Atom::Eq(xv(i), vertex(&m)))));
            }
            for &j in &gs.best {
                if i < j {
                    parts.push(Formula::not(Formula::Atom(Atom::E(xv(i), xv(j)))));
                }
            }
        }
        let Some((mut g, env)) = realize_in_standard_model(frag, &Formula::and(parts))? else {
            return Err(Error::Inconsistent(format!("good set {:?} of disjunct {t} has no realization", gs.best)));
        };
        let abar: Vec<usize> = xs
            .iter()
            .map(|x| match &env[x] {
                Value::Vertex(v) => Ok(*v),
                v => Err(Error::Inconsistent(format!("{x} realized as {v}"))),
            })
            .collect::<Result<_>>()?;
        let b = g.add_vertex("bw")?;
        let targets: BTreeSet<usize> = gs.best.iter().map(|&i| abar[i - 1]).collect();
        for &a in &targets {
            if !g.rel.add_e(a, b) {
                return Err(Error::Inconsistent("witness vertex adjacent to itself".into()));
            }
        }
        if let Some(k) = g.rel.find_clique(s) {
            return Err(Error::Inconsistent(format!("witness closes a K_{s} on {k:?}")));
        }
        let hits = abar.iter().filter(|&&a| g.rel.holds_e(a, b)).count();
        let av = frac(hits as i64, n as i64);
        let bound = frac(size as i64, n as i64);
        let pe_val = pe.eval(&vars(&["x"]), &g.parse_formula("E(x,bw)")?, &g)?;
        let sat = g.eval(theta, &env)?;
        res.row(format!("t{t}.av"), av.clone());
        res.row(format!("t{t}.bound"), bound.clone());
        res.row(format!("t{t}.p_E"), pe_val.clone());
        res.pass &= sat && av >= bound && &av >= eps && pe_val.is_zero();
    }
    if consistent == 0 {
        return Err(Error::Inconsistent(format!("`{theta}` has no consistent disjunct")));
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_counts() {
        for m in 1..4 {
            let base: Vec<String> = (0..m).map(|i| format!("b{i}")).collect();
            assert_eq!(ternary_atoms(&base, "z").len(), one_variable_instances(m));
        }
    }

    #[test]
    fn ternary_gap_small() {
        let r = run_ternary_gap(1, 2).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.get("eta1"), Some(&int(1)));
        assert_eq!(r.get("eta1_library"), Some(&int(1)));
        assert_eq!(r.get("eta2"), Some(&frac(1, 64)));
        assert!(run_ternary_gap(0, 2).is_err());
        assert!(run_ternary_gap(1, 129).is_err());
    }

    #[test]
    fn property_ii() {
        let none = run_pq_property_ii(1, &[]).unwrap();
        assert!(none.pass, "{none:?}");
        let some = run_pq_property_ii(1, &[0, 5, 128]).unwrap();
        assert!(some.pass, "{some:?}");
        assert_eq!(some.get("verified"), Some(&int(129)));
    }

    #[test]
    fn nocom_values() {
        let r = run_nocom().unwrap();
        assert!(r.pass);
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.get("(q*mu)(x sqin y)").unwrap() - r.get("(mu*q)(x sqin y)").unwrap(), frac(1, 2));
    }

    #[test]
    fn thalf_examples() {
        let h = |s: &str| HalfSet::from_set(s.parse().unwrap()).unwrap();
        assert_eq!(thalf_nonfam_certificate(&[h("[0,1/2)"), h("[1/2,1)")]).unwrap(), (frac(0, 1), 1));
        assert_eq!(thalf_nonfam_certificate(&[h("[0,1/2)")]).unwrap(), (frac(1, 2), 0));
        let b = thalf_satisfiability_witness(&[frac(1, 10), frac(6, 10)]).unwrap();
        assert_eq!(b.set().to_string(), "[0,1/4)+[1/2,3/4)");
        assert_eq!(thalf_satisfiability_witness(&[frac(0, 1)]).unwrap().set().to_string(), "[0,1/2)");
        assert!(thalf_satisfiability_witness(&[]).is_err());
        assert!(thalf_satisfiability_witness(&[frac(1, 3), frac(1, 3)]).is_err());
    }

    #[test]
    fn qpq_small() {
        let r = run_qpq_suite(2, 2).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.get("av_error(x sqin y)"), Some(&frac(1, 2)));
        assert_eq!(r.get("patterns_verified"), Some(&int(4)));
        assert!(run_qpq_suite(4, 0).is_err());
    }

    #[test]
    fn henson_examples() {
        let f = Fragment::from_text("theory henson 3\nparam m\n").unwrap();
        let th = f.parse_formula("!E(x1,x2) & x1 != m & x2 != m").unwrap();
        let r = run_henson_tgood(&f, &th, 2, &frac(1, 2)).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.get("t0.max_good"), Some(&int(2)));
        assert_eq!(r.get("t0.av"), Some(&int(1)));
        let th = f.parse_formula("E(x1,x2)").unwrap();
        assert_eq!(run_henson_tgood(&f, &th, 2, &frac(1, 2)).unwrap().get("t0.max_good"), Some(&int(1)));
        let th = f.parse_formula("x1 = m & !E(x1,x2)").unwrap();
        let gs = good_sets(&f, &th, 2).unwrap();
        assert_eq!(gs.best, vec![2]);
        assert!(run_henson_tgood(&f, &f.parse_formula("E(x1,x1)").unwrap(), 1, &frac(1, 2)).is_err());
    }
}
