#![allow(dead_code)]

use std::io::Write;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use pavg_core::measures::{CylinderMetric, EmpiricalMeasure};
use pavg_core::noise::CounterRng;
use pavg_core::sde::LiftedState;

/// Bounded-Lipschitz distance from the dual LP on the union support:
/// maximize `Σ (μ_i - ν_i) f_i` with `|f_i| <= 1`, `f_i - f_j <= d(p_i, p_j)`.
pub fn bl_by_lp(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, metric: &CylinderMetric) -> f64 {
    let mut points: Vec<(LiftedState, f64)> = Vec::new();
    for (p, w) in mu.support().iter().zip(mu.weights()) {
        points.push((p.clone(), *w));
    }
    for (p, w) in nu.support().iter().zip(nu.weights()) {
        points.push((p.clone(), -*w));
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = points.iter().map(|(_, c)| lp.add_var(*c, (-1.0, 1.0))).collect();
    for i in 0..points.len() {
        for j in 0..points.len() {
            if i != j {
                let d = metric.distance(&points[i].0, &points[j].0);
                lp.add_constraint([(vars[i], 1.0), (vars[j], -1.0)], ComparisonOp::Le, d);
            }
        }
    }
    lp.solve().expect("bounded LP").objective()
}

/// Random measure with `n` atoms on the cylinder with period 1 and `dt = 0.01`.
pub fn random_measure(rng: &mut CounterRng, n: usize, dim: usize) -> EmpiricalMeasure {
    let support: Vec<LiftedState> = (0..n)
        .map(|_| {
            let phase = (rng.uniform() * 100.0) as usize % 100;
            let y = (0..dim).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
            LiftedState::new(phase, 0.01, y)
        })
        .collect();
    let raw: Vec<f64> = (0..n).map(|_| 0.1 + rng.uniform()).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    // force an exact unit sum
    let rest: f64 = weights[1..].iter().sum();
    weights[0] = 1.0 - rest;
    EmpiricalMeasure::new(support, weights).expect("valid measure")
}

/// One line per acceptance criterion, written past the test harness capture.
pub fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[acceptance {id:>2}] {status} {title}: {detail}");
    let _ = out.flush();
}
