//! Random periodic solutions as pullback limits of the lifted flow.
//!
//! Iterate `k` is the map `r ↦ Φ(r + kτ, θ_{-kτ} ω, (0, anchor))`, i.e. the
//! fast subsystem started from `anchor` at time `-kτ` and observed at the
//! grid times `r` of `[0, τ]`. Each iterate is re-simulated from scratch.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::noise::{Noise, Shift};
use crate::sde::{LiftedState, SlowFastSystem, Stepper};
use crate::stats::{dist, ls_slope};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PullbackConfig {
    pub k_max: usize,
    pub tol: f64,
    /// Spacing of the r-grid in steps.
    pub r_stride: usize,
}

impl Default for PullbackConfig {
    fn default() -> Self {
        Self {
            k_max: 40,
            tol: 1e-4,
            r_stride: 1,
        }
    }
}

impl PullbackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max < 2 {
            return Err(invalid("k_max must be at least 2"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("pullback tol must be positive"));
        }
        if self.r_stride == 0 {
            return Err(invalid("r_stride must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodicSolutionEstimate {
    pub x_frozen: Vec<f64>,
    pub anchor: Vec<f64>,
    pub dt: f64,
    pub period_steps: usize,
    /// r-grid in steps, increasing, from 0 to `period_steps` inclusive.
    pub r_steps: Vec<usize>,
    /// `S̃(r, ω)` for each r on the grid; `r = τ` wraps to phase 0.
    pub values: Vec<LiftedState>,
    pub k_used: usize,
    /// `sup_r |iterate_k(r) - iterate_{k-1}(r)|` for `k = 1..=k_used`.
    pub sup_diffs: Vec<f64>,
    /// Least-squares slope of `ln sup_diffs` against `k` over the last half
    /// of the sequence: the empirical decay exponent per period.
    pub rate_estimate: Option<f64>,
    pub converged: bool,
    pub config: PullbackConfig,
}

impl PeriodicSolutionEstimate {
    pub fn r_grid(&self) -> Vec<f64> {
        self.r_steps.iter().map(|&r| r as f64 * self.dt).collect()
    }

    /// Value at the grid point `r_step`, if it lies on the r-grid.
    pub fn value_at_step(&self, r_step: usize) -> Option<&LiftedState> {
        self.r_steps.binary_search(&r_step).ok().map(|i| &self.values[i])
    }
}

pub(crate) struct PullbackRun {
    pub values: Vec<Vec<f64>>,
    pub k_used: usize,
    pub sup_diffs: Vec<f64>,
    pub converged: bool,
}

/// Pullback iterates observed at `r_steps` (sorted, may exceed one period).
pub(crate) fn pullback_core<N: Noise>(
    sys: &SlowFastSystem,
    x: &[f64],
    anchor: &[f64],
    path: &N,
    k_max: usize,
    tol: f64,
    r_steps: &[usize],
) -> Result<PullbackRun> {
    if anchor.len() != sys.fast_dim() || x.len() != sys.slow_dim() {
        return Err(invalid("pullback: dimension mismatch"));
    }
    debug_assert!(r_steps.windows(2).all(|w| w[0] <= w[1]));
    let dt = path.grid().dt();
    let mut stepper = Stepper::new(sys, dt)?;
    let period = stepper.period();
    let r_max = *r_steps.last().ok_or_else(|| invalid("empty r-grid"))?;
    let origin = path.grid().origin_index();

    let mut prev: Option<Vec<Vec<f64>>> = None;
    let mut sup_diffs = Vec::new();
    for k in 0..=k_max {
        let lead = k * period;
        let mut y = anchor.to_vec();
        let mut values = Vec::with_capacity(r_steps.len());
        let mut next = 0;
        // r = 0 with k = 0 is the anchor itself
        while next < r_steps.len() && lead + r_steps[next] == 0 {
            values.push(y.clone());
            next += 1;
        }
        stepper.run_fast(x, &mut y, 0, path, origin - lead as i64, lead + r_max, |j, y| {
            while next < r_steps.len() && j == lead + r_steps[next] {
                values.push(y.to_vec());
                next += 1;
            }
        })?;
        if let Some(p) = &prev {
            let diff = p.iter().zip(&values).map(|(a, b)| dist(a, b)).fold(0.0, f64::max);
            sup_diffs.push(diff);
            if diff < tol {
                return Ok(PullbackRun {
                    values,
                    k_used: k,
                    sup_diffs,
                    converged: true,
                });
            }
        }
        prev = Some(values);
    }
    Ok(PullbackRun {
        values: prev.unwrap_or_default(),
        k_used: k_max,
        sup_diffs,
        converged: false,
    })
}

fn rate_from_diffs(diffs: &[f64]) -> Option<f64> {
    let start = diffs.len() / 2;
    let (ks, logs): (Vec<f64>, Vec<f64>) = diffs
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, d)| **d > 0.0)
        .map(|(i, d)| ((i + 1) as f64, d.ln()))
        .unzip();
    ls_slope(&ks, &logs)
}

fn r_grid_steps(period: usize, stride: usize) -> Vec<usize> {
    let mut r: Vec<usize> = (0..period).step_by(stride).collect();
    r.push(period);
    r
}

/// Pullback approximation of the random periodic solution `S̃(r, ω)` for
/// `r` on the grid `0, stride, ..., τ`. The anchor sits at phase 0.
///
/// Running out of iterations is not an error; the estimate comes back with
/// `converged = false`.
pub fn pullback_solve<N: Noise>(
    sys: &SlowFastSystem,
    x_frozen: &[f64],
    anchor: &[f64],
    path: &N,
    config: &PullbackConfig,
) -> Result<PeriodicSolutionEstimate> {
    config.validate()?;
    let dt = path.grid().dt();
    let period = sys.period_steps(dt)?;
    let r_steps = r_grid_steps(period, config.r_stride);
    let run = pullback_core(sys, x_frozen, anchor, path, config.k_max, config.tol, &r_steps)?;
    let values = r_steps
        .iter()
        .zip(run.values)
        .map(|(&r, y)| LiftedState::new(r % period, dt, y))
        .collect();
    Ok(PeriodicSolutionEstimate {
        x_frozen: x_frozen.to_vec(),
        anchor: anchor.to_vec(),
        dt,
        period_steps: period,
        rate_estimate: rate_from_diffs(&run.sup_diffs),
        r_steps,
        values,
        k_used: run.k_used,
        sup_diffs: run.sup_diffs,
        converged: run.converged,
        config: *config,
    })
}

/// Pullback value at a single section `r_step` (any nonnegative step count).
#[derive(Debug, Clone)]
pub struct PullbackPoint {
    pub state: LiftedState,
    pub k_used: usize,
    pub converged: bool,
}

pub fn pullback_point<N: Noise>(
    sys: &SlowFastSystem,
    x_frozen: &[f64],
    anchor: &[f64],
    path: &N,
    r_step: usize,
    config: &PullbackConfig,
) -> Result<PullbackPoint> {
    let mut v = pullback_sections(sys, x_frozen, anchor, path, &[r_step], config)?;
    let (state, k_used, converged) = v.pop().expect("one section");
    Ok(PullbackPoint {
        state,
        k_used,
        converged,
    })
}

/// Pullback values at several sections from one set of iterates.
pub(crate) fn pullback_sections<N: Noise>(
    sys: &SlowFastSystem,
    x_frozen: &[f64],
    anchor: &[f64],
    path: &N,
    r_steps: &[usize],
    config: &PullbackConfig,
) -> Result<Vec<(LiftedState, usize, bool)>> {
    config.validate()?;
    let dt = path.grid().dt();
    let period = sys.period_steps(dt)?;
    let mut order: Vec<usize> = (0..r_steps.len()).collect();
    order.sort_by_key(|&i| r_steps[i]);
    let sorted: Vec<usize> = order.iter().map(|&i| r_steps[i]).collect();
    let run = pullback_core(sys, x_frozen, anchor, path, config.k_max, config.tol, &sorted)?;
    let mut out = vec![None; r_steps.len()];
    for (pos, y) in order.into_iter().zip(run.values) {
        out[pos] = Some((
            LiftedState::new(r_steps[pos] % period, dt, y),
            run.k_used,
            run.converged,
        ));
    }
    Ok(out.into_iter().map(|v| v.expect("filled")).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodicityReport {
    /// `sup_r |S(r + τ, ω) - S(r, θ_τ ω)|`.
    pub shift_residual: f64,
    /// `sup_(t, s) |Φ(t, θ_s ω, S(s, ω)) - S(t + s, ω)|` over the sampled pairs.
    pub flow_residual: f64,
    /// The flow residual at `t = 0`.
    pub flow_residual_at_zero: f64,
    pub n_flow_pairs: usize,
    pub threshold: f64,
    pub passed: bool,
}

/// Checks the two defining identities of a random periodic solution on a
/// converged estimate.
pub fn verify_random_periodicity<N: Noise + Shift>(
    estimate: &PeriodicSolutionEstimate,
    sys: &SlowFastSystem,
    path: &N,
    tol: f64,
) -> Result<PeriodicityReport> {
    if !estimate.converged {
        return Err(invalid("verify_random_periodicity needs a converged estimate"));
    }
    let cfg = estimate.config;
    let x = &estimate.x_frozen;
    let period = estimate.period_steps;

    let shifted = path.shift_steps(period as i64);
    let at_shifted = pullback_core(
        sys,
        x,
        &estimate.anchor,
        &shifted,
        cfg.k_max,
        cfg.tol,
        &estimate.r_steps,
    )?;
    let later: Vec<usize> = estimate.r_steps.iter().map(|r| r + period).collect();
    let one_period_on = pullback_core(sys, x, &estimate.anchor, path, cfg.k_max, cfg.tol, &later)?;
    let shift_residual = at_shifted
        .values
        .iter()
        .zip(&one_period_on.values)
        .map(|(a, b)| dist(a, b))
        .fold(0.0, f64::max);

    // (t, s) pairs with s + t on the r-grid
    let n = estimate.r_steps.len();
    let stride = (n / 8).max(1);
    let mut pairs = Vec::new();
    for i in (0..n).step_by(stride) {
        for j in (i..n).step_by(stride) {
            pairs.push((i, j));
        }
    }
    pairs.push((n / 2, n / 2));
    let mut flow_residual = 0.0f64;
    let mut flow_residual_at_zero = 0.0f64;
    let dt = estimate.dt;
    for &(i, j) in &pairs {
        let s = estimate.r_steps[i];
        let t = estimate.r_steps[j] - s;
        let moved = crate::sde::lifted_flow(sys, x, &estimate.values[i], &path.shift_steps(s as i64), t as f64 * dt)?;
        let target = &estimate.values[j];
        let mut r = dist(&moved.y, &target.y);
        if moved.phase != target.phase {
            r = f64::INFINITY;
        }
        flow_residual = flow_residual.max(r);
        if t == 0 {
            flow_residual_at_zero = flow_residual_at_zero.max(r);
        }
    }
    let threshold = tol + cfg.tol;
    Ok(PeriodicityReport {
        shift_residual,
        flow_residual,
        flow_residual_at_zero,
        n_flow_pairs: pairs.len(),
        threshold,
        passed: shift_residual <= threshold && flow_residual <= threshold,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityRow {
    pub perturbation: Vec<f64>,
    /// `|Φ(kτ, ω, S̃(0, ω) + δ) - S̃(0, θ_{kτ} ω)|` for `k = 0..=horizon`.
    pub diffs: Vec<f64>,
    /// Least-squares slope of `ln diffs` against time; `None` when all
    /// differences vanish.
    pub slope_per_time: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityTable {
    pub horizon_periods: usize,
    pub tau: f64,
    pub rows: Vec<StabilityRow>,
}

/// Decay of perturbations of `S̃(0, ω)` under the forward flow.
pub fn stability_probe<N: Noise>(
    sys: &SlowFastSystem,
    x_frozen: &[f64],
    estimate: &PeriodicSolutionEstimate,
    perturbations: &[Vec<f64>],
    path: &N,
    horizon_periods: usize,
) -> Result<StabilityTable> {
    if !estimate.converged {
        return Err(invalid("stability_probe needs a converged estimate"));
    }
    let start = estimate
        .value_at_step(0)
        .ok_or_else(|| invalid("estimate has no value at r = 0"))?;
    let dt = path.grid().dt();
    let mut stepper = Stepper::new(sys, dt)?;
    let period = stepper.period();
    let origin = path.grid().origin_index();
    let n = horizon_periods * period;

    let mut run = |y0: &[f64]| -> Result<Vec<Vec<f64>>> {
        let mut y = y0.to_vec();
        let mut out = vec![y.clone()];
        stepper.run_fast(x_frozen, &mut y, 0, path, origin, n, |j, y| {
            if j % period == 0 {
                out.push(y.to_vec());
            }
        })?;
        Ok(out)
    };
    let reference = run(&start.y)?;
    let mut rows = Vec::with_capacity(perturbations.len());
    for delta in perturbations {
        if delta.len() != start.y.len() {
            return Err(invalid("perturbation has the wrong dimension"));
        }
        let y0: Vec<f64> = start.y.iter().zip(delta).map(|(a, b)| a + b).collect();
        let moved = run(&y0)?;
        let diffs: Vec<f64> = moved.iter().zip(&reference).map(|(a, b)| dist(a, b)).collect();
        let (ts, logs): (Vec<f64>, Vec<f64>) = diffs
            .iter()
            .enumerate()
            .filter(|(_, d)| **d > 0.0)
            .map(|(k, d)| (k as f64 * sys.tau(), d.ln()))
            .unzip();
        rows.push(StabilityRow {
            perturbation: delta.clone(),
            slope_per_time: ls_slope(&ts, &logs),
            diffs,
        });
    }
    Ok(StabilityTable {
        horizon_periods,
        tau: sys.tau(),
        rows,
    })
}
