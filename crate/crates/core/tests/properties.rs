//! Algebraic laws and module contracts checked on generated inputs.

use keisler::approx::{av_error, fam_search};
use keisler::formula::{parse, to_dnf, Atom, Formula, Literal, Sort, Term};
use keisler::measures::{convex_combine, GlobalType, IndependentFamilySpec, Measure, Point};
use keisler::measures::independent_family_measure;
use keisler::morley::{check_commute, power_eval, product_eval};
use keisler::theories::{
    carve_interval_subset, check_diagram_consistency, realize_in_standard_model, Env, Fragment, IntervalUnion,
    TheoryId, Value,
};
use keisler::types::enumerate_types;
use keisler::Rational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use proptest::sample::select;

fn q(a: i64, b: i64) -> Rational {
    Rational::new(a.into(), b.into())
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
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

fn boolean_over(atoms: Vec<String>) -> impl Strategy<Value = String> {
    select(atoms).prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| format!("!({f})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} & {b})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("({a} | {b})")),
        ]
    })
}

fn tr_fragment(facts: u32) -> Fragment {
    let ps = ["a", "b"];
    let mut text = String::from("theory tr\nparam a, b\n");
    for i in 0..8 {
        if facts >> i & 1 == 1 {
            text += &format!("fact R({},{},{})\n", ps[i & 1], ps[i >> 1 & 1], ps[i >> 2 & 1]);
        }
    }
    Fragment::from_text(&text).unwrap()
}

fn graph_fragment(edge: bool) -> Fragment {
    let text = if edge { "theory random-graph\nparam a, b\nfact E(a,b)\n" } else { "theory random-graph\nparam a, b\n" };
    Fragment::from_text(text).unwrap()
}

fn value(f: &Fragment, n: &str) -> Value {
    f.value(n).unwrap().clone()
}

fn tr_measures(f: &Fragment) -> Vec<Measure> {
    vec![
        Measure::dirac(value(f, "a")),
        Measure::Average(vec![value(f, "a"), value(f, "b"), value(f, "b")]),
        Measure::coin_flip(),
        Measure::CoinFlip { bias: q(1, 3) },
        convex_combine(vec![(q(1, 4), Measure::dirac(value(f, "b"))), (q(3, 4), Measure::coin_flip())]).unwrap(),
        Measure::Dirac(Point::Type(GlobalType::TernaryP { witnesses: names(&["a", "b"]) })),
    ]
}

fn graph_measures(f: &Fragment) -> Vec<Measure> {
    vec![
        Measure::dirac(value(f, "b")),
        Measure::Average(vec![value(f, "a"), value(f, "b")]),
        Measure::coin_flip(),
        Measure::Dirac(Point::Type(GlobalType::NonAdjacent)),
    ]
}

const PQ_ATOMS: &[&str] = &[
    "x0 sqin b",
    "x0 sqin (b join y0)",
    "y0 sim b",
    "(y0 meet comp(b)) = bot",
    "l(y0) = 1/2",
    "l(b meet y0) < r",
    "z0 + 2*z0 = l(b)",
    "x0 = a",
    "y0 != top",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn print_then_parse_is_identity(text in boolean_over(relational_atoms(false, &["x", "y", "a", "b"]))) {
        let f = parse(&text).unwrap();
        prop_assert_eq!(parse(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn print_then_parse_is_identity_with_quantifiers(
        body in boolean_over(PQ_ATOMS.iter().map(|s| s.to_string()).collect()),
        prefix in select(vec!["", "exists x0. ", "forall y0. ", "exists z0. exists y0. "]),
    ) {
        let frag = Fragment::from_text("theory thalf-inf\nparam a : P\nparam b : Q = 0:[0,1/2)\nparam r : R = 1/3\n").unwrap();
        let f = frag.parse_formula(&format!("{prefix}({body})")).unwrap();
        prop_assert_eq!(frag.parse_formula(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn dnf_preserves_truth(
        text in boolean_over(relational_atoms(false, &["x", "y", "a", "b"])),
        facts in 0u32..256,
        xa in 0usize..2,
        yb in 0usize..2,
    ) {
        let frag = tr_fragment(facts);
        let f = frag.parse_formula(&text).unwrap();
        let dnf = to_dnf(&f).unwrap().to_formula();
        let mut env = Env::new();
        env.insert("x".into(), value(&frag, ["a", "b"][xa]));
        env.insert("y".into(), value(&frag, ["a", "b"][yb]));
        prop_assert_eq!(frag.eval(&f, &env).unwrap(), frag.eval(&dnf, &env).unwrap());
    }

    #[test]
    fn measures_are_finitely_additive(
        phi in boolean_over(relational_atoms(false, &["x", "a", "b"])),
        psi in boolean_over(relational_atoms(false, &["x", "a", "b"])),
        facts in 0u32..256,
        which in 0usize..6,
    ) {
        let frag = tr_fragment(facts);
        let m = &tr_measures(&frag)[which];
        let x = names(&["x"]);
        let ev = |s: &str| m.eval(&x, &frag.parse_formula(s).unwrap(), &frag).unwrap();
        let (a, b) = (ev(&phi), ev(&psi));
        prop_assert_eq!(ev(&format!("({phi}) | ({psi})")) + ev(&format!("({phi}) & ({psi})")), &a + &b);
        prop_assert_eq!(ev(&format!("!({phi})")), Rational::one() - &a);
        prop_assert!(ev("x = x").is_one());
        prop_assert!(ev("!(x = x)").is_zero());
        prop_assert!(a >= Rational::zero() && a <= Rational::one());
    }

    #[test]
    fn graph_measures_are_finitely_additive(
        phi in boolean_over(relational_atoms(true, &["x", "a", "b"])),
        psi in boolean_over(relational_atoms(true, &["x", "a", "b"])),
        edge in any::<bool>(),
        which in 0usize..4,
    ) {
        let frag = graph_fragment(edge);
        let m = &graph_measures(&frag)[which];
        let x = names(&["x"]);
        let ev = |s: &str| m.eval(&x, &frag.parse_formula(s).unwrap(), &frag).unwrap();
        let (a, b) = (ev(&phi), ev(&psi));
        prop_assert_eq!(ev(&format!("({phi}) | ({psi})")) + ev(&format!("({phi}) & ({psi})")), a + b);
    }

    #[test]
    fn independent_family_is_additive(
        phi in boolean_over(names(&["R(x,a,a)", "R(x,b,a)", "R(x,x,b)"])),
        psi in boolean_over(names(&["R(x,a,a)", "R(x,b,a)", "R(x,x,b)"])),
        f0 in 0i64..=6, f1 in 0i64..=6, f2 in 0i64..=6,
    ) {
        let frag = tr_fragment(0b1010_0101);
        let family = ["R(x,a,a)", "R(x,b,a)", "R(x,x,b)"].iter().map(|s| frag.parse_formula(s).unwrap()).collect();
        let spec = IndependentFamilySpec { var: "x".into(), family, f: vec![q(f0, 6), q(f1, 6), q(f2, 6)] };
        let m = independent_family_measure(spec, &frag).unwrap();
        let x = names(&["x"]);
        let ev = |s: &str| m.eval(&x, &frag.parse_formula(s).unwrap(), &frag).unwrap();
        prop_assert_eq!(ev(&format!("({phi}) | ({psi})")) + ev(&format!("({phi}) & ({psi})")), ev(&phi) + ev(&psi));
        prop_assert_eq!(ev(&format!("!({phi})")), Rational::one() - ev(&phi));
    }

    #[test]
    fn products_are_linear_in_the_left_factor(
        phi in boolean_over(relational_atoms(false, &["x", "y", "a"])),
        facts in 0u32..256,
        i in 0usize..6, j in 0usize..6, k in 0usize..6,
        r in 0i64..=5,
    ) {
        let frag = tr_fragment(facts);
        let ms = tr_measures(&frag);
        let r = q(r, 5);
        let (xs, ys) = (names(&["x"]), names(&["y"]));
        let f = frag.parse_formula(&phi).unwrap();
        let mix = if r.is_zero() {
            ms[j].clone()
        } else if r.is_one() {
            ms[i].clone()
        } else {
            convex_combine(vec![(r.clone(), ms[i].clone()), (Rational::one() - &r, ms[j].clone())]).unwrap()
        };
        let lhs = product_eval(&mix, &xs, &ms[k], &ys, &f, &frag).unwrap();
        let rhs = &r * product_eval(&ms[i], &xs, &ms[k], &ys, &f, &frag).unwrap()
            + (Rational::one() - &r) * product_eval(&ms[j], &xs, &ms[k], &ys, &f, &frag).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn powers_restrict_to_lower_powers(
        phi in boolean_over(relational_atoms(false, &["x1", "x2", "a"])),
        facts in 0u32..256,
        which in 0usize..5,
    ) {
        let frag = tr_fragment(facts);
        let m = &tr_measures(&frag)[which];
        let f = frag.parse_formula(&phi).unwrap();
        let two = power_eval(m, 2, &names(&["x1", "x2"]), &f, &frag).unwrap();
        let three = power_eval(m, 3, &names(&["x1", "x2", "x3"]), &f, &frag).unwrap();
        prop_assert_eq!(two, three);
    }

    #[test]
    fn dirac_measures_commute(
        phi in boolean_over(relational_atoms(false, &["x", "y", "a", "b"])),
        facts in 0u32..256,
        which in 0usize..6,
    ) {
        let frag = tr_fragment(facts);
        let nu = &tr_measures(&frag)[which];
        let f = frag.parse_formula(&phi).unwrap();
        let report = check_commute(&Measure::dirac(value(&frag, "a")), nu, "x", "y", &frag, &[f]).unwrap();
        prop_assert!(report.is_equal(), "{:?}", report);
    }

    #[test]
    fn henson_consistency_is_triangle_freeness(edges in proptest::collection::btree_set((0usize..5, 0usize..5), 0..8)) {
        let v = |i: usize| Term::param(&format!("p{i}"), Sort::Vertex);
        let edges: Vec<(usize, usize)> = edges.into_iter().filter(|(a, b)| a < b).collect();
        let mut diagram: Vec<Literal> = edges.iter().map(|&(a, b)| Literal::pos(Atom::E(v(a), v(b)))).collect();
        for a in 0..5 {
            for b in a + 1..5 {
                diagram.push(Literal::neg(Atom::Eq(v(a), v(b))));
            }
        }
        let adj = |a: usize, b: usize| edges.contains(&(a.min(b), a.max(b)));
        let triangle = (0..5).any(|a| (a + 1..5).any(|b| (b + 1..5).any(|c| adj(a, b) && adj(b, c) && adj(a, c))));
        let ok = check_diagram_consistency(TheoryId::Henson(3), &diagram).unwrap().is_some();
        prop_assert_eq!(ok, !triangle);
        prop_assert!(check_diagram_consistency(TheoryId::RandomGraph, &diagram).unwrap().is_some());
    }

    #[test]
    fn carved_subsets_meet_the_contract(
        cuts in proptest::collection::btree_set(0i64..24, 2..7),
        picks in proptest::collection::vec(0i64..48, 0..4),
        mass in 1i64..24,
    ) {
        let cuts: Vec<i64> = cuts.into_iter().collect();
        let ivs: Vec<(Rational, Rational)> = cuts.chunks(2).filter(|c| c.len() == 2).map(|c| (q(c[0], 24), q(c[1], 24))).collect();
        let x = IntervalUnion::new(ivs).unwrap();
        let total = x.measure();
        let r = &total * q(mass, 24);
        let mut points: Vec<Rational> = picks.iter().map(|p| q(*p, 48)).filter(|p| x.contains(p)).collect();
        points.sort();
        points.dedup();
        prop_assume!(r > Rational::zero() && r < total);
        let y = carve_interval_subset(&x, &points, &r).unwrap();
        prop_assert_eq!(y.measure(), r);
        prop_assert!(y.is_subset(&x) && y != x);
        prop_assert!(points.iter().all(|p| y.contains(p)));
    }

    #[test]
    fn witnesses_satisfy_their_goals(text in boolean_over(relational_atoms(true, &["x", "y", "a", "b"])), s in 3usize..5) {
        for theory in [TheoryId::RandomGraph, TheoryId::Henson(s)] {
            let frag = Fragment::from_text(&format!("theory {theory}\nparam a, b\nfact E(a,b)\n")).unwrap();
            let goal = frag.parse_formula(&text).unwrap();
            if let Some((g, env)) = realize_in_standard_model(&frag, &goal).unwrap() {
                prop_assert!(g.eval(&goal, &env).unwrap());
            }
        }
    }

    #[test]
    fn fam_search_results_reverify(
        phi in boolean_over(relational_atoms(false, &["x", "a", "b"])),
        facts in 0u32..256,
        which in 0usize..3,
        eps in 1i64..4,
    ) {
        let frag = tr_fragment(facts);
        let m = &tr_measures(&frag)[which];
        let eps = q(eps, 4);
        let f = frag.parse_formula(&phi).unwrap();
        if let Some((tuple, err)) = fam_search(m, "x", Sort::Vertex, &f, &eps, &frag, 4).unwrap() {
            let vals: Vec<Value> = tuple.iter().map(|n| value(&frag, n)).collect();
            let again = av_error(m, "x", &vals, &f, &frag).unwrap();
            prop_assert_eq!(&again.value, &err);
            prop_assert!(err < eps);
        }
    }

    #[test]
    fn type_clopens_partition(phi in boolean_over(relational_atoms(false, &["x", "a"])), facts in 0u32..2) {
        let text = if facts == 1 { "theory tr\nparam a\nfact R(a,a,a)\n" } else { "theory tr\nparam a\n" };
        let frag = Fragment::from_text(text).unwrap();
        let space = enumerate_types(&frag, &names(&["x"])).unwrap();
        let f = frag.parse_formula(&phi).unwrap();
        let inside = space.clopen(&f).unwrap().len();
        let outside = space.clopen(&Formula::not(f)).unwrap().len();
        prop_assert_eq!(inside + outside, space.types.len());
    }
}

#[test]
fn cube_measure_of_membership_is_length() {
    let frag = Fragment::from_text(
        "theory thalf-inf\nparam b : Q = 0:[0,1/3)+[1/2,3/4)\nparam c : Q = 2:[1/8,1)\nparam d : Q = top\n",
    )
    .unwrap();
    let x = names(&["x"]);
    for (name, len) in [("b", q(7, 12)), ("c", q(7, 8)), ("d", q(1, 1))] {
        let f = frag.parse_formula(&format!("x sqin {name}")).unwrap();
        assert_eq!(Measure::CubeLebesgue.eval(&x, &f, &frag).unwrap(), len, "{name}");
    }
}

#[test]
fn type_counts_match_the_extension_axioms() {
    let x = names(&["x"]);
    for (text, count) in [
        ("theory tr\n", 2),
        ("theory tr\nparam a\n", 1 + (1 << 7)),
        ("theory random-graph\n", 1),
        ("theory random-graph\nparam a\n", 1 + 2),
        ("theory random-graph\nparam a, b\nfact E(a,b)\n", 2 + 4),
    ] {
        let frag = Fragment::from_text(text).unwrap();
        assert_eq!(enumerate_types(&frag, &x).unwrap().types.len(), count, "{text}");
    }
    let frag = Fragment::from_text("theory random-graph\nparam a\n").unwrap();
    // x=y=a, x=a only, y=a only, x=y new, all distinct
    let two = enumerate_types(&frag, &names(&["x", "y"])).unwrap().types.len();
    assert_eq!(two, 1 + 2 + 2 + 2 + 2 * 2 * 2);
}
