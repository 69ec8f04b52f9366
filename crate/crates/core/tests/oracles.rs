use std::f64::consts::PI;

use pavg_core::catalog::OuParams;
use pavg_core::noise::make_path;
use pavg_core::oracles::{ou_random_periodic_oracle, toy_v};
use pavg_core::pullback::{pullback_solve, PullbackConfig};
use pavg_core::quad::integrate;

#[test]
fn toy_v_equals_its_defining_integral() {
    for gamma in [0.5f64, 1.0, 2.0, 5.0] {
        for t in [0.0f64, 0.13, 0.5, 0.77] {
            // e^{-γ 40} is far below the tolerance
            let lower = t - 40.0 / gamma;
            let panels = (400.0 * (t - lower)).ceil() as usize;
            let q = integrate(|s| (-gamma * (t - s)).exp() * (2.0 * PI * s).cos(), lower, t, panels, 8);
            assert!((q - toy_v(t, gamma)).abs() < 1e-8, "γ={gamma} t={t}");
        }
    }
}

#[test]
fn toy_v_solves_its_ode() {
    let h = 1e-5;
    for gamma in [0.3, 1.0, 3.0] {
        for k in 0..50 {
            let t = k as f64 / 50.0;
            let dv = (toy_v(t + h, gamma) - toy_v(t - h, gamma)) / (2.0 * h);
            let residual = dv + gamma * toy_v(t, gamma) - (2.0 * PI * t).cos();
            assert!(residual.abs() < 1e-6, "γ={gamma} t={t}: {residual}");
        }
    }
}

#[test]
fn pullback_agrees_with_the_ou_oracle_on_a_coarse_grid() {
    let p = OuParams::default();
    let sys = p.build().unwrap();
    let coef = p.coefficients();
    let dt = 0.01;
    let cfg = PullbackConfig::default();
    for seed in [1, 2, 3] {
        let path = make_path(seed, dt, 1).unwrap();
        let est = pullback_solve(&sys, &[0.0], &[0.0], &path, &cfg).unwrap();
        assert!(est.converged);
        assert!(est.rate_estimate.unwrap() < 0.0);
        let mut sup: f64 = 0.0;
        let mut bound: f64 = 0.0;
        for (r, v) in est.r_grid().iter().zip(&est.values) {
            let o = ou_random_periodic_oracle(&coef, &path, *r, 10).unwrap();
            sup = sup.max((v.y[0] - o.value).abs());
            bound = bound.max(o.truncation_bound);
        }
        assert!(sup <= f64::max(5.0 * dt, cfg.tol) + bound, "seed {seed}: {sup}");
    }
}

/// With a tiny tolerance the iteration runs to k_max and the fitted decay
/// exponent per period approaches `-mean(α) τ`.
#[test]
fn pullback_decay_exponent_matches_the_contraction() {
    for (a, k_max) in [(1.0, 25), (2.0, 14)] {
        let sys = OuParams::constant(a, 1.0).build().unwrap();
        let path = make_path(17, 0.01, 1).unwrap();
        let cfg = PullbackConfig {
            k_max,
            tol: 1e-300,
            r_stride: 10,
        };
        let est = pullback_solve(&sys, &[0.0], &[0.0], &path, &cfg).unwrap();
        let rate = est.rate_estimate.unwrap();
        let expected = 100.0 * (1.0f64 - a * 0.01).ln();
        assert!((rate - expected).abs() < 0.15 * a, "a={a}: {rate} vs {expected}");
    }
}
