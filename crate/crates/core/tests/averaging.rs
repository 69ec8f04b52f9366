use std::sync::Arc;

use pavg_core::averaging::{
    averaged_drift_ergodic, averaged_drift_measure, averaging_error_study, build_drift_table, solve_averaged_ode,
    DriftMethod, DriftSource, ErgodicBudget, ErrorStudyConfig, MeasureBudget,
};
use pavg_core::catalog::{OuParams, SystemSpec, ToySystemParams};
use pavg_core::measures::{sample_sections, section_grid, SamplingConfig};
use pavg_core::noise::make_path;
use pavg_core::oracles::{toy_averaged_drift, ToyParams};
use pavg_core::sde::{Arity, SlowFastSystem, VectorField};

#[test]
fn ergodic_mean_of_centred_ou_is_zero() {
    let sys = OuParams::constant(2.0, 1.0).build().unwrap();
    let path = make_path(17, 0.01, 1).unwrap();
    let e = averaged_drift_ergodic(&sys, &[0.0], 1000.0, 10.0, &path, 32).unwrap();
    assert!(e.value[0].abs() <= 3.0 * e.se[0], "{:?}", e);
    assert!(e.se[0] > 0.0);
}

/// `E y²` under the stationary law of the Euler chain `y ← (1 - dt) y + ξ`.
#[test]
fn measure_route_second_moment_matches_the_discrete_stationary_variance() {
    let p = OuParams {
        slow_linear: 0.0,
        slow_quadratic: 1.0,
        ..OuParams::constant(1.0, 1.0)
    };
    let sys = p.build().unwrap();
    let cfg = SamplingConfig {
        dt: 0.01,
        base_seed: 23,
        ..Default::default()
    };
    let grid = section_grid(100, 4);
    let s = sample_sections(&sys, &[0.0], &grid, 1000, &cfg).unwrap();
    let e = averaged_drift_measure(&sys, &[0.0], &s.sections).unwrap();
    let want = 0.5 / (1.0 - 0.01 / 2.0);
    assert!(
        (e.value[0] - want).abs() <= 3.0 * e.se[0],
        "{} ± {} vs {want}",
        e.value[0],
        e.se[0]
    );
}

#[test]
fn both_routes_agree_on_catalog_systems() {
    let specs = [
        (SystemSpec::OuPeriodic(OuParams::default()), vec![0.0]),
        (SystemSpec::ToyTurbulence(ToySystemParams::default()), vec![0.5]),
    ];
    let ergodic = DriftSource::Ergodic(ErgodicBudget {
        t_erg: 4000.0,
        ..Default::default()
    });
    let measure = DriftSource::Measure(MeasureBudget {
        n_samples: 400,
        sampling: SamplingConfig {
            max_sections: 8,
            ..Default::default()
        },
    });
    for (spec, x) in specs {
        let sys = spec.build().unwrap();
        let a = ergodic.estimate(&sys, &x).unwrap();
        let b = measure.estimate(&sys, &x).unwrap();
        let se = a.se[0].hypot(b.se[0]);
        assert!(
            (a.value[0] - b.value[0]).abs() <= 3.0 * se,
            "{}: {a:?} vs {b:?}",
            spec.name()
        );
        if let Some(f) = spec.closed_form_drift() {
            let c = f(&x).unwrap()[0];
            assert!((b.value[0] - c).abs() <= 3.0 * b.se[0] + 0.01, "{} vs {c}", b.value[0]);
        }
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(f(lo) * f(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn averaged_ode_settles_on_the_positive_root() {
    let toy = ToyParams::default();
    let root = bisect(|x| toy_averaged_drift(x, &toy).unwrap(), 0.0, 4.0);
    let drift = |x: &[f64]| Ok(vec![toy_averaged_drift(x[0], &toy)?]);
    let traj = solve_averaged_ode(drift, &[0.0], 0.1, 20.0, 0.05).unwrap();
    let end = traj.last()[0];
    assert!((end - root).abs() < 1e-6, "{end} vs {root}");
}

#[test]
fn drift_tables() {
    let spec = SystemSpec::ToyTurbulence(ToySystemParams::default());
    let sys = spec.build().unwrap();
    let source = DriftSource::ClosedForm(spec.closed_form_drift().unwrap());
    let axis = |h: f64| {
        (0..=(4.0 / h) as usize)
            .map(|i| -2.0 + i as f64 * h)
            .collect::<Vec<_>>()
    };
    let coarse = build_drift_table(&sys, vec![axis(0.5)], &source).unwrap();
    let fine = build_drift_table(&sys, vec![axis(0.25)], &source).unwrap();
    let finer = build_drift_table(&sys, vec![axis(0.125)], &source).unwrap();
    let (a, b, c) = (
        coarse.max_adjacent_slope(),
        fine.max_adjacent_slope(),
        finer.max_adjacent_slope(),
    );
    assert!(b <= 1.1 * a && c <= 1.1 * b, "{a} {b} {c}");
    assert_eq!(fine.method, DriftMethod::ClosedForm);
    assert!(fine.eval(&[2.5]).is_err());

    // constant slow drift
    let flat = SlowFastSystem::new(
        "flat",
        1.0,
        0.1,
        VectorField::vector(Arity::XY, 1, |_, _, _, o| o[0] = 3.0),
        VectorField::of_y(1, |y, o| o[0] = -y[0]),
        VectorField::matrix(Arity::Y, 1, 1, |_, _, _, o| o[0] = 1.0),
    )
    .unwrap();
    let src = DriftSource::Ergodic(ErgodicBudget {
        t_erg: 50.0,
        burn_in: 1.0,
        ..Default::default()
    });
    let t = build_drift_table(&flat, vec![vec![-1.0, 0.0, 1.0]], &src).unwrap();
    assert!(t.values.iter().all(|v| v[0] == 3.0));
    assert!(t.se.iter().all(|s| s[0] == 0.0));
    assert_eq!(t.max_adjacent_slope(), 0.0);
}

fn toy_system(sigma: f64, beta: f64) -> (SlowFastSystem, ToyParams) {
    let p = ToySystemParams {
        toy: ToyParams {
            sigma,
            beta,
            ..Default::default()
        },
        ..Default::default()
    };
    (p.build().unwrap(), p.toy)
}

/// Without noise or forcing the fast state stays at rest, so what remains
/// is time discretization: it must shrink with dt.
#[test]
fn deterministic_toy_error_is_discretization_only() {
    let (sys, toy) = toy_system(0.0, 0.0);
    let drift = move |x: &[f64]| Ok(vec![toy.alpha * x[0] + toy.vartheta * x[0].powi(3)]);
    let run = |dt: f64| {
        let cfg = ErrorStudyConfig {
            dt,
            ..Default::default()
        };
        averaging_error_study(&sys, &[1.0], &[0.1], 1.0, 30, &drift, &cfg)
            .unwrap()
            .reports[0]
            .mean
    };
    let (coarse, fine) = (run(0.01), run(0.005));
    assert!(coarse < 1e-3, "{coarse}");
    assert!(coarse <= 10.0 * (coarse - fine).abs(), "{coarse} vs {fine}");
}

#[test]
fn error_study_ignores_the_pullback_anchor() {
    let (sys, toy) = toy_system(1.0, 1.0);
    let drift = move |x: &[f64]| Ok(vec![toy_averaged_drift(x[0], &toy)?]);
    let drift = Arc::new(drift);
    let study = |anchor: Option<Vec<f64>>| {
        let cfg = ErrorStudyConfig {
            anchor,
            ..Default::default()
        };
        let d = drift.clone();
        averaging_error_study(&sys, &[0.5], &[0.1], 1.0, 30, &move |x| d(x), &cfg)
            .unwrap()
            .reports[0]
            .clone()
    };
    let a = study(None);
    let b = study(Some(vec![3.0]));
    assert_eq!(a.pullback_unconverged, 0);
    assert!(
        (a.mean - b.mean).abs() <= 2.0 * a.se.hypot(b.se),
        "{} vs {}",
        a.mean,
        b.mean
    );
}
