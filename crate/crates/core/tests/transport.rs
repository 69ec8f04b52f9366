mod common;

use common::{bl_by_lp, random_measure};
use pavg_core::measures::{bl_distance, bl_distance_capped, CylinderMetric, EmpiricalMeasure};
use pavg_core::noise::CounterRng;
use pavg_core::sde::LiftedState;
use proptest::prelude::*;

#[test]
fn transport_matches_the_dual_lp() {
    let metric = CylinderMetric::new(1.0);
    let mut rng = CounterRng::new(21, 4);
    for k in 0..150 {
        let mu = random_measure(&mut rng, 1 + k % 4, 1 + k % 3);
        let nu = random_measure(&mut rng, 1 + (k / 4) % 4, 1 + k % 3);
        let d = bl_distance(&mu, &nu, &metric);
        let lp = bl_by_lp(&mu, &nu, &metric);
        assert!((d - lp).abs() < 1e-9, "instance {k}: transport {d}, LP {lp}");
    }
}

#[test]
fn circle_coordinate_enters_the_distance() {
    let metric = CylinderMetric::new(1.0);
    let a = EmpiricalMeasure::dirac(LiftedState::new(0, 0.01, vec![0.0]));
    let b = EmpiricalMeasure::dirac(LiftedState::new(50, 0.01, vec![0.0]));
    assert!((bl_distance(&a, &b, &metric) - 0.5).abs() < 1e-12);
    assert!((bl_by_lp(&a, &b, &metric) - 0.5).abs() < 1e-9);
}

#[test]
fn large_measures_are_subsampled_and_flagged() {
    let metric = CylinderMetric::new(1.0);
    let mut rng = CounterRng::new(2, 2);
    let mu = random_measure(&mut rng, 600, 1);
    let nu = random_measure(&mut rng, 100, 1);
    let out = bl_distance_capped(&mu, &nu, &metric, 512);
    assert!(out.subsampled);
    assert!((0.0..=2.0).contains(&out.value));
    assert!(!bl_distance_capped(&nu, &nu, &metric, 512).subsampled);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms(seed in any::<u64>(), n in 1usize..4, m in 1usize..4, l in 1usize..4) {
        let metric = CylinderMetric::new(1.0);
        let mut rng = CounterRng::new(seed, 8);
        let a = random_measure(&mut rng, n, 2);
        let b = random_measure(&mut rng, m, 2);
        let c = random_measure(&mut rng, l, 2);
        let ab = bl_distance(&a, &b, &metric);
        prop_assert_eq!(ab.to_bits(), bl_distance(&b, &a, &metric).to_bits());
        prop_assert!((0.0..=2.0).contains(&ab));
        prop_assert!(bl_distance(&a, &a, &metric) == 0.0);
        prop_assert!(ab <= bl_distance(&a, &c, &metric) + bl_distance(&c, &b, &metric) + 1e-9);
    }
}
