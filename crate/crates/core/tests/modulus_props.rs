use conefix_core::mappings::{
    classify_family, estimate_tr_modulus, modulus_holds_at, pair_modulus, FamilyClass,
};
use conefix_core::sampling::pairs_in_box;
use conefix_core::{ConeMetricSpace, Interval, MapTriple, NormKind, RealMap, SampleSpec};
use proptest::prelude::*;

fn spaces() -> Vec<ConeMetricSpace<f64>> {
    vec![
        ConeMetricSpace::product(1.0, NormKind::Euclidean).unwrap(),
        ConeMetricSpace::product(0.3, NormKind::Supremum).unwrap(),
        ConeMetricSpace::exp_weighted(9).unwrap(),
    ]
}

const TRIPLES: [(&str, &str, &str); 4] = [
    ("x+1", "exp(-x)", "2*exp(-x)"),
    ("x/2", "x^3", "x^3"),
    ("0.3*x + sin(x)/4", "x", "x"),
    ("x/3 - 1", "2*x", "2*x + 1"),
];

#[test]
fn estimate_is_sound_on_every_sampled_pair() {
    let bx = Interval::new(-3.0, 3.0).unwrap();
    for space in spaces() {
        for (s, t, r) in TRIPLES {
            let triple = MapTriple::parse(s, t, r).unwrap();
            let est = estimate_tr_modulus(&triple, &space, bx, 2_000, 5).unwrap();
            for (x, y) in pairs_in_box(bx, bx, SampleSpec::new(5, 2_000)) {
                assert!(
                    modulus_holds_at(&triple, &space, est.a_hat, x, y).unwrap(),
                    "{s} at ({x}, {y})"
                );
            }
        }
    }
}

#[test]
fn estimate_is_tight_at_its_witness() {
    let bx = Interval::new(-3.0, 3.0).unwrap();
    for space in spaces() {
        for (s, t, r) in TRIPLES {
            let triple = MapTriple::parse(s, t, r).unwrap();
            let est = estimate_tr_modulus(&triple, &space, bx, 2_000, 9).unwrap();
            let (x, y) = est.witness.unwrap();
            let smaller = est.a_hat * (1.0 - 1e-6);
            assert!(!modulus_holds_at(&triple, &space, smaller, x, y).unwrap(), "{s}");
        }
    }
}

#[test]
fn estimate_never_decreases_with_more_pairs() {
    let space = ConeMetricSpace::product(1.0, NormKind::Euclidean).unwrap();
    let triple = MapTriple::parse("0.3*x + sin(x)/4", "x", "x").unwrap();
    let bx = Interval::new(-3.0, 3.0).unwrap();
    let mut prev = 0.0;
    for n in [10, 100, 1_000, 5_000] {
        let a = estimate_tr_modulus(&triple, &space, bx, n, 3).unwrap().a_hat;
        assert!(a >= prev);
        prev = a;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn builtin_metrics_give_equal_component_ratios(x in -4.0..4.0f64, y in -4.0..4.0f64) {
        prop_assume!((x - y).abs() > 1e-6);
        for space in spaces() {
            for (s, t, r) in TRIPLES {
                let triple = MapTriple::parse(s, t, r).unwrap();
                let pm = pair_modulus(&triple, &space, x, y).unwrap();
                let first = pm.per_component[0];
                for &c in &pm.per_component {
                    prop_assert!((c - first).abs() <= 1e-12 * first.abs().max(1.0));
                }
            }
        }
    }
}

#[test]
fn scaling_maps_classify_as_alpha_contractions() {
    let space = ConeMetricSpace::product(1.0, NormKind::Euclidean).unwrap();
    let bx = Interval::new(-5.0, 5.0).unwrap();
    for c in [0.1f64, 0.5, 0.9] {
        let map = RealMap::parse(&format!("{c}*x")).unwrap();
        let fc = classify_family(&map, &space, bx, SampleSpec::new(2, 2_000), None).unwrap();
        match fc.class {
            FamilyClass::AlphaContraction { alpha } => assert!((alpha - c).abs() <= 1e-9),
            other => panic!("c={c}: {other:?}"),
        }
    }
}
