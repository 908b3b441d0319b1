use conefix_core::ordered_space::estimate_normal_constant;
use conefix_core::{NormKind, OrderCone, SampleSpec, SpaceElement};
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), Just(-1.0), -10.0..10.0f64]
}

fn vec2() -> impl Strategy<Value = SpaceElement<f64>> {
    prop::collection::vec(coord(), 2).prop_map(|v| SpaceElement::finite(v).unwrap())
}

fn nonneg2() -> impl Strategy<Value = SpaceElement<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..10.0f64], 2)
        .prop_map(|v| SpaceElement::finite(v).unwrap())
}

fn cones() -> Vec<OrderCone<f64>> {
    vec![
        OrderCone::orthant(2, NormKind::Euclidean).unwrap(),
        OrderCone::orthant(2, NormKind::Supremum).unwrap(),
        OrderCone::orthant(2, NormKind::Skew(0.1)).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn order_is_a_partial_order(x in vec2(), y in vec2(), z in vec2()) {
        let p = OrderCone::orthant(2, NormKind::Euclidean).unwrap();
        prop_assert!(p.leq(&x, &x).unwrap());
        if p.leq(&x, &y).unwrap() && p.leq(&y, &x).unwrap() {
            prop_assert_eq!(&x, &y);
        }
        if p.leq(&x, &y).unwrap() && p.leq(&y, &z).unwrap() {
            prop_assert!(p.leq(&x, &z).unwrap());
        }
        if p.strictly_less(&x, &y).unwrap() {
            prop_assert!(p.leq(&x, &y).unwrap());
        }
    }

    #[test]
    fn cone_closed_under_nonnegative_combinations(
        x in nonneg2(), y in nonneg2(), a in 0.0..100.0f64, b in 0.0..100.0f64,
    ) {
        let p = OrderCone::orthant(2, NormKind::Supremum).unwrap();
        let c = x.scale(a).unwrap().add(&y.scale(b).unwrap()).unwrap();
        prop_assert!(p.contains(&c).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn norm_axioms(v in vec2(), u in vec2(), lambda in -50.0..50.0f64) {
        for p in cones() {
            let nv = p.norm(&v).unwrap();
            prop_assert_eq!(nv == 0.0, v.is_zero());
            let scaled = p.norm(&v.scale(lambda).unwrap()).unwrap();
            prop_assert!((scaled - lambda.abs() * nv).abs() <= 1e-12 * (1.0 + scaled));
            let sum = p.norm(&v.add(&u).unwrap()).unwrap();
            let bound = nv + p.norm(&u).unwrap();
            prop_assert!(sum <= bound * (1.0 + 1e-12));
        }
    }
}

#[test]
fn monotone_norms_have_unit_normal_constant() {
    for norm in [NormKind::<f64>::Euclidean, NormKind::Supremum] {
        for n in [1, 2, 5] {
            let p = OrderCone::orthant(n, norm).unwrap();
            let est = estimate_normal_constant(&p, SampleSpec::new(7, 20_000));
            assert!(est.k_hat <= 1.0 + 1e-12, "{norm:?} n={n}: {}", est.k_hat);
        }
    }
    let grid = OrderCone::<f64>::nonneg_grid(33).unwrap();
    let est = estimate_normal_constant(&grid, SampleSpec::new(7, 5_000));
    assert!(est.k_hat <= 1.0 + 1e-12);
}

#[test]
fn skew_norm_normal_constant_reaches_witness() {
    let p = OrderCone::orthant(2, NormKind::Skew(0.1)).unwrap();
    let est = estimate_normal_constant(&p, SampleSpec::new(3, 20_000));
    assert!(est.k_hat >= 5.5 - 1e-12, "{}", est.k_hat);
    let (x, y) = est.witness.unwrap();
    assert!(p.leq(&p.zero(), &x).unwrap() && p.leq(&x, &y).unwrap());
}

#[test]
fn single_precision_cone() {
    let p = OrderCone::<f32>::orthant(3, NormKind::Euclidean).unwrap();
    let v = SpaceElement::finite(vec![3.0f32, 4.0, 0.0]).unwrap();
    assert!(p.contains(&v).unwrap());
    assert_eq!(p.norm(&v).unwrap(), 5.0);
}
