use pavg_core::catalog::{OuParams, ToySystemParams};
use pavg_core::measures::{
    bl_distance, empirical_periodic_measure, krylov_bogolyubov_curve, measure_lipschitz_probe, poincare_section_check,
    sample_sections, CylinderBox, CylinderMetric, EmpiricalMeasure, KbConfig, PoincareConfig, SamplingConfig,
};
use pavg_core::noise::{derive_seed, make_path};
use pavg_core::oracles::{ou_random_periodic_oracle, OuCoefficients};
use pavg_core::quad::integrate;
use pavg_core::sde::{LiftedState, Stepper};
use pavg_core::stats::{mean_se, variance_se};

fn sampling(seed: u64) -> SamplingConfig {
    SamplingConfig {
        dt: 0.01,
        base_seed: seed,
        ..Default::default()
    }
}

/// Fast marginal at r = 0 of the forced OU example against its Gaussian law.
#[test]
fn ou_section_moments_match_closed_form() {
    let p = OuParams::default();
    let sys = p.build().unwrap();
    let m = empirical_periodic_measure(&sys, &[0.0], 0.0, 1000, &sampling(31)).unwrap();
    let ys: Vec<f64> = m.measure.support().iter().map(|a| a.y[0]).collect();

    let deterministic = OuCoefficients {
        sigma: 0.0,
        ..p.coefficients()
    };
    let any_path = make_path(0, 0.01, 1).unwrap();
    let mean = ou_random_periodic_oracle(&deterministic, &any_path, 0.0, 20)
        .unwrap()
        .value;
    // Var S(0) = ∫_{-∞}^0 exp(-2 ∫_s^0 α) ds with ∫_s^0 α = -2s - sin(2πs)/(2π)
    let var = integrate(
        |s| (-2.0 * (-2.0 * s - (2.0 * std::f64::consts::PI * s).sin() / (2.0 * std::f64::consts::PI))).exp(),
        -12.0,
        0.0,
        240,
        8,
    );
    let ms = mean_se(&ys);
    let vs = variance_se(&ys);
    assert!((ms.mean - mean).abs() <= 3.0 * ms.se, "mean {} vs {mean}", ms.mean);
    assert!((vs.mean - var).abs() <= 3.0 * vs.se, "variance {} vs {var}", vs.mean);
}

/// Reference scale for d_BL between two empirical measures of one law.
fn noise_floor(sys: &pavg_core::sde::SlowFastSystem, r_step: usize, n: usize) -> f64 {
    let a = sample_sections(sys, &[0.0], &[r_step], n, &sampling(41)).unwrap();
    let b = sample_sections(sys, &[0.0], &[r_step], n, &sampling(42)).unwrap();
    bl_distance(&a.sections[0], &b.sections[0], &CylinderMetric::new(sys.tau()))
}

#[test]
fn section_measures_are_periodic() {
    let sys = OuParams::default().build().unwrap();
    let metric = CylinderMetric::new(1.0);
    let n = 300;
    for r in [0, 37, 80] {
        let s = sample_sections(&sys, &[0.0], &[r, r + 100], n, &sampling(43)).unwrap();
        let d = bl_distance(&s.sections[0], &s.sections[1], &metric);
        let floor = noise_floor(&sys, r, n);
        assert!(d <= 3.0 * floor, "r={r}: {d} vs floor {floor}");
    }
}

#[test]
fn one_period_evolution_preserves_the_section_measure() {
    let sys = ToySystemParams::default().build().unwrap();
    let n = 300;
    let mu = empirical_periodic_measure(&sys, &[0.0], 0.25, n, &sampling(51))
        .unwrap()
        .measure;
    let pushed: Vec<LiftedState> = mu
        .support()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let path = make_path(derive_seed(999, i as u64), 0.01, 1).unwrap();
            let mut y = a.y.clone();
            Stepper::new(&sys, 0.01)
                .unwrap()
                .run_fast(&[0.0], &mut y, a.phase, &path, 0, 100, |_, _| {})
                .unwrap();
            LiftedState::new(a.phase, 0.01, y)
        })
        .collect();
    let pushed = EmpiricalMeasure::uniform(pushed).unwrap();
    let d = bl_distance(&mu, &pushed, &CylinderMetric::new(1.0));
    let floor = noise_floor(&sys, 25, n);
    assert!(d <= 3.0 * floor, "{d} vs floor {floor}");
}

#[test]
fn poincare_returns() {
    // σ = 0: every sample sits on the periodic orbit and returns onto it
    let sys = OuParams {
        sigma: 0.0,
        ..Default::default()
    }
    .build()
    .unwrap();
    let m = empirical_periodic_measure(&sys, &[0.0], 0.0, 3, &sampling(61))
        .unwrap()
        .measure;
    let hull = CylinderBox::bounding(&m, 1e-3);
    let rep = poincare_section_check(&m, &sys, &[0.0], &hull, &PoincareConfig::default()).unwrap();
    assert_eq!(rep.fraction, 1.0);

    let sys = OuParams::default().build().unwrap();
    let m = empirical_periodic_measure(&sys, &[0.0], 0.0, 400, &sampling(62))
        .unwrap()
        .measure;
    let cfg = PoincareConfig {
        dt: 0.01,
        n_paths_per_atom: 5,
        base_seed: 7,
    };
    let wide = poincare_section_check(&m, &sys, &[0.0], &CylinderBox::sigma_box(&m, 6.0), &cfg).unwrap();
    assert!(wide.fraction >= 0.999, "{}", wide.fraction);
    let narrow = poincare_section_check(&m, &sys, &[0.0], &CylinderBox::sigma_box(&m, 0.5), &cfg).unwrap();
    // a ±0.5σ box holds about 38% of a Gaussian
    assert!(narrow.fraction < 0.5, "{}", narrow.fraction);
}

/// Started far from the measure the Cesàro curve decays, and its first
/// entry dominates the last.
#[test]
fn krylov_bogolyubov_decays_from_a_fixed_start() {
    let sys = OuParams::default().build().unwrap();
    let cfg = sampling(71);
    let reference = empirical_periodic_measure(&sys, &[0.0], 0.0, 800, &cfg)
        .unwrap()
        .measure;
    let mut ys: Vec<f64> = reference.support().iter().map(|a| a.y[0]).collect();
    ys.sort_by(f64::total_cmp);
    let median = ys[ys.len() / 2];
    let boxes = [
        CylinderBox::new(vec![f64::NEG_INFINITY], vec![median]).unwrap(),
        CylinderBox::everything(1),
    ];
    let start = EmpiricalMeasure::dirac(LiftedState::new(0, 0.01, vec![4.0]));
    let kb = KbConfig {
        dt: 0.01,
        n_starts: 1,
        n_paths: 400,
        m_max: 16,
        base_seed: 5,
    };
    let curves = krylov_bogolyubov_curve(&sys, &[0.0], 0, &reference, &start, &boxes, &kb).unwrap();
    let c = &curves[0];
    let (first, last) = (&c.rows[0], c.rows.last().unwrap());
    assert!(!c.inconclusive);
    assert!(first.discrepancy + 2.0 * first.se >= last.discrepancy);
    assert!(last.discrepancy < 0.5 * first.discrepancy);
    assert!(curves[1].rows.iter().all(|r| r.discrepancy < 1e-12));
}

#[test]
fn lipschitz_probe_conventions() {
    let sys = ToySystemParams::default().build().unwrap();
    let cfg = SamplingConfig {
        max_sections: 4,
        ..sampling(81)
    };
    let t = measure_lipschitz_probe(&sys, &[vec![0.0], vec![0.0], vec![10.0]], 16, &cfg).unwrap();
    for e in &t.entries {
        if e.separation == 0.0 {
            assert_eq!(e.ratio, 0.0);
            assert_eq!(e.distance, 0.0);
        } else {
            assert!(e.ratio <= 0.2 + 1e-12);
        }
    }
    assert!(measure_lipschitz_probe(&sys, &[vec![0.0]], 16, &cfg).is_err());
}
