//! The averaged equation and the averaging error.
//!
//! `F̄` is estimated along one long frozen-`x` trajectory (ergodic route) or
//! by integrating `F` against sampled periodic measures (measure route). The
//! averaged ODE `dX̄/dt = ε F̄(X̄)` is integrated with RK4 on the simulation
//! grid and compared against coupled slow-fast runs.

use serde::{Deserialize, Serialize};

use crate::catalog::ClosedFormDrift;
use crate::error::{invalid, Error, Result};
use crate::measures::{sample_sections, section_grid, EmpiricalMeasure, SamplingConfig};
use crate::noise::{derive_seed, make_path, steps_of, Noise};
use crate::par::try_map_indexed;
use crate::pullback::{pullback_point, PullbackConfig};
use crate::sde::{SlowFastSystem, Stepper, Trajectory};
use crate::stats::{dist, mean_se, MeanSe};

/// `F̄(x)` with one standard error per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftEstimate {
    pub value: Vec<f64>,
    pub se: Vec<f64>,
}

/// Time average of `F(x, Y_t)` after `burn_in`, along the frozen fast
/// trajectory started at `y = 0`, phase 0. Standard errors come from
/// `n_batches` batch means.
pub fn averaged_drift_ergodic<N: Noise>(
    sys: &SlowFastSystem,
    x: &[f64],
    t_erg: f64,
    burn_in: f64,
    path: &N,
    n_batches: usize,
) -> Result<DriftEstimate> {
    if !(t_erg > burn_in) || burn_in < 0.0 {
        return Err(invalid("need t_erg > burn_in >= 0"));
    }
    if n_batches < 16 {
        return Err(invalid("need at least 16 batches"));
    }
    let dt = path.grid().dt();
    let n_burn = steps_of(burn_in, dt, "burn_in")? as usize;
    let n_total = steps_of(t_erg, dt, "t_erg")? as usize;
    let n_avg = n_total - n_burn;
    let batch_len = n_avg / n_batches;
    if batch_len == 0 {
        return Err(invalid("averaging window shorter than the batch count"));
    }
    let d = sys.slow_dim();
    let mut stepper = Stepper::new(sys, dt)?;
    let origin = path.grid().origin_index();
    let mut y = vec![0.0; sys.fast_dim()];
    stepper.run_fast(x, &mut y, 0, path, origin, n_burn, |_, _| {})?;

    let used = batch_len * n_batches;
    let mut batches = vec![vec![0.0; n_batches]; d];
    let mut f = vec![0.0; d];
    let slow = sys.slow_drift();
    let period = stepper.period();
    stepper.run_fast(
        x,
        &mut y,
        n_burn % period,
        path,
        origin + n_burn as i64,
        used,
        |j, y| {
            // F reads the state after the step, at its own phase
            let t = ((n_burn + j) % period) as f64 * dt;
            slow.eval_into(t, x, y, &mut f);
            let b = (j - 1) / batch_len;
            for k in 0..d {
                batches[k][b] += f[k];
            }
        },
    )?;
    let mut value = Vec::with_capacity(d);
    let mut se = Vec::with_capacity(d);
    for b in &batches {
        let means: Vec<f64> = b.iter().map(|s| s / batch_len as f64).collect();
        let ms = mean_se(&means);
        value.push(ms.mean);
        se.push(ms.se);
    }
    Ok(DriftEstimate { value, se })
}

/// `(1/J) Σ_j ∫ F(x, y) μ_{r_j}(dy)` over section measures.
///
/// When every section is uniform on the same number of atoms, atom `i` of
/// each section is treated as coming from the same sample and the error is
/// taken over the per-sample section averages. Otherwise sections are
/// treated as independent.
pub fn averaged_drift_measure(sys: &SlowFastSystem, x: &[f64], sections: &[EmpiricalMeasure]) -> Result<DriftEstimate> {
    if sections.is_empty() {
        return Err(invalid("no section measures given"));
    }
    let d = sys.slow_dim();
    let j = sections.len() as f64;
    let f_at = |m: &EmpiricalMeasure, i: usize| {
        let p = &m.support()[i];
        sys.slow_drift().eval(p.s, x, &p.y)
    };
    let n0 = sections[0].len();
    let aligned = sections
        .iter()
        .all(|m| m.len() == n0 && m.weights().iter().all(|w| (w - 1.0 / n0 as f64).abs() < 1e-15));
    let mut value = vec![0.0; d];
    let mut se = vec![0.0; d];
    if aligned && n0 >= 2 {
        let mut per_sample = vec![vec![0.0; n0]; d];
        for m in sections {
            for i in 0..n0 {
                let f = f_at(m, i);
                for k in 0..d {
                    per_sample[k][i] += f[k] / j;
                }
            }
        }
        for k in 0..d {
            let ms = mean_se(&per_sample[k]);
            value[k] = ms.mean;
            se[k] = ms.se;
        }
    } else {
        let mut var = vec![0.0; d];
        for m in sections {
            let vals: Vec<Vec<f64>> = (0..m.len()).map(|i| f_at(m, i)).collect();
            for k in 0..d {
                let mean: f64 = vals.iter().zip(m.weights()).map(|(v, w)| w * v[k]).sum();
                let second: f64 = vals.iter().zip(m.weights()).map(|(v, w)| w * v[k] * v[k]).sum();
                value[k] += mean / j;
                if m.len() > 1 {
                    var[k] += (second - mean * mean).max(0.0) / m.len() as f64 / (j * j);
                }
            }
        }
        se = var.iter().map(|v| v.sqrt()).collect();
    }
    Ok(DriftEstimate { value, se })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftMethod {
    ErgodicAverage,
    MeasureAverage,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErgodicBudget {
    pub dt: f64,
    pub t_erg: f64,
    pub burn_in: f64,
    pub n_batches: usize,
    /// One path, shared by every node.
    pub seed: u64,
}

impl Default for ErgodicBudget {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_erg: 2000.0,
            burn_in: 20.0,
            n_batches: 32,
            seed: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureBudget {
    pub n_samples: usize,
    pub sampling: SamplingConfig,
}

impl Default for MeasureBudget {
    fn default() -> Self {
        Self {
            n_samples: 200,
            sampling: SamplingConfig {
                max_sections: 16,
                ..SamplingConfig::default()
            },
        }
    }
}

/// Where table values come from.
#[derive(Clone)]
pub enum DriftSource {
    Ergodic(ErgodicBudget),
    Measure(MeasureBudget),
    ClosedForm(ClosedFormDrift),
}

impl DriftSource {
    pub fn method(&self) -> DriftMethod {
        match self {
            Self::Ergodic(_) => DriftMethod::ErgodicAverage,
            Self::Measure(_) => DriftMethod::MeasureAverage,
            Self::ClosedForm(_) => DriftMethod::ClosedForm,
        }
    }

    /// `F̄(x)` at a single point.
    pub fn estimate(&self, sys: &SlowFastSystem, x: &[f64]) -> Result<DriftEstimate> {
        match self {
            Self::Ergodic(b) => {
                let path = make_path(b.seed, b.dt, sys.noise_dim())?;
                averaged_drift_ergodic(sys, x, b.t_erg, b.burn_in, &path, b.n_batches)
            }
            Self::Measure(b) => {
                let period = sys.period_steps(b.sampling.dt)?;
                let grid = section_grid(period, b.sampling.max_sections);
                let s = sample_sections(sys, x, &grid, b.n_samples, &b.sampling)?;
                averaged_drift_measure(sys, x, &s.sections)
            }
            Self::ClosedForm(f) => {
                let value = f(x)?;
                Ok(DriftEstimate {
                    se: vec![0.0; value.len()],
                    value,
                })
            }
        }
    }
}

/// `F̄` on a tensor grid (one axis per slow coordinate, `d <= 2`), evaluated
/// by multilinear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragedDriftTable {
    pub axes: Vec<Vec<f64>>,
    /// Node values in row-major order over the axes.
    pub values: Vec<Vec<f64>>,
    pub se: Vec<Vec<f64>>,
    pub method: DriftMethod,
}

impl AveragedDriftTable {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<Vec<f64>>, se: Vec<Vec<f64>>, method: DriftMethod) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(invalid("drift tables support one or two slow dimensions"));
        }
        for a in &axes {
            if a.is_empty() || a.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(invalid("grid axes must be nonempty and strictly increasing"));
            }
        }
        let nodes: usize = axes.iter().map(Vec::len).product();
        if values.len() != nodes || se.len() != nodes {
            return Err(invalid("table size does not match the grid"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("table values must be finite"));
        }
        Ok(Self {
            axes,
            values,
            se,
            method,
        })
    }

    /// Nodes of the grid in row-major order.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        grid_nodes(&self.axes)
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.axes.len() {
            return Err(invalid("point dimension does not match the table"));
        }
        // per axis: (lower index, weight of the upper node)
        let mut cell = Vec::with_capacity(x.len());
        for (a, &v) in self.axes.iter().zip(x) {
            let (lo, hi) = (a[0], a[a.len() - 1]);
            if !(v >= lo && v <= hi) {
                return Err(Error::Extrapolation {
                    x: x.to_vec(),
                    lo: self.axes.iter().map(|a| a[0]).collect(),
                    hi: self.axes.iter().map(|a| a[a.len() - 1]).collect(),
                });
            }
            if a.len() == 1 {
                cell.push((0, 0.0));
                continue;
            }
            let i = (a.partition_point(|g| *g <= v).max(1) - 1).min(a.len() - 2);
            cell.push((i, (v - a[i]) / (a[i + 1] - a[i])));
        }
        let d = self.values[0].len();
        let mut out = vec![0.0; d];
        let corners = 1usize << x.len();
        for c in 0..corners {
            let mut w = 1.0;
            let mut flat = 0;
            let mut skip = false;
            for (ax, &(i, t)) in cell.iter().enumerate() {
                let up = (c >> ax) & 1 == 1;
                let len = self.axes[ax].len();
                if up && len == 1 {
                    skip = true;
                    break;
                }
                w *= if up { t } else { 1.0 - t };
                flat = flat * len + i + up as usize;
            }
            if skip || w == 0.0 {
                continue;
            }
            for k in 0..d {
                out[k] += w * self.values[flat][k];
            }
        }
        Ok(out)
    }

    /// Largest `|F̄(x_{i+1}) - F̄(x_i)| / |x_{i+1} - x_i|` along the first
    /// axis (first output coordinate, first row for two axes).
    pub fn max_adjacent_slope(&self) -> f64 {
        let a = &self.axes[0];
        let stride: usize = self.axes[1..].iter().map(Vec::len).product();
        a.windows(2)
            .enumerate()
            .map(|(i, w)| {
                let f0 = self.values[i * stride][0];
                let f1 = self.values[(i + 1) * stride][0];
                (f1 - f0).abs() / (w[1] - w[0])
            })
            .fold(0.0, f64::max)
    }

    /// CSV `x_1[,x_2],fbar_1..,se_1..`.
    pub fn to_csv(&self) -> String {
        use crate::measures::fmt_f64;
        let d = self.values[0].len();
        let mut head: Vec<String> = (1..=self.axes.len()).map(|k| format!("x_{k}")).collect();
        head.extend((1..=d).map(|k| format!("fbar_{k}")));
        head.extend((1..=d).map(|k| format!("se_{k}")));
        let mut out = head.join(",");
        out.push('\n');
        for ((node, v), s) in self.nodes().iter().zip(&self.values).zip(&self.se) {
            let row: Vec<String> = node.iter().chain(v).chain(s).map(|z| fmt_f64(*z)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn grid_nodes(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut nodes = vec![Vec::new()];
    for a in axes {
        nodes = nodes
            .into_iter()
            .flat_map(|n| {
                a.iter().map(move |v| {
                    let mut m = n.clone();
                    m.push(*v);
                    m
                })
            })
            .collect();
    }
    nodes
}

/// Tabulates `F̄` on the tensor grid spanned by `axes`, nodes in parallel.
pub fn build_drift_table(
    sys: &SlowFastSystem,
    axes: Vec<Vec<f64>>,
    source: &DriftSource,
) -> Result<AveragedDriftTable> {
    if axes.len() != sys.slow_dim() {
        return Err(invalid("one grid axis per slow coordinate is required"));
    }
    let nodes = grid_nodes(&axes);
    let est = try_map_indexed(nodes.len(), |i| source.estimate(sys, &nodes[i]))?;
    let (values, se) = est.into_iter().map(|e| (e.value, e.se)).unzip();
    AveragedDriftTable::new(axes, values, se, source.method())
}

/// RK4 for `dX̄/dt = ε F̄(X̄)` on `[0, T/ε]` with step `dt`.
pub fn solve_averaged_ode(
    drift: impl Fn(&[f64]) -> Result<Vec<f64>>,
    x0: &[f64],
    epsilon: f64,
    t_total: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon must be positive"));
    }
    let n = steps_of(t_total / epsilon, dt, "T / epsilon")?;
    if n <= 0 {
        return Err(invalid("T must be positive"));
    }
    let mut traj = Trajectory::with_capacity(0.0, dt, x0, n as usize + 1);
    let mut x = x0.to_vec();
    let h = epsilon * dt;
    let shifted = |x: &[f64], k: &[f64], c: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    for _ in 0..n {
        let k1 = drift(&x)?;
        let k2 = drift(&shifted(&x, &k1, 0.5 * h))?;
        let k3 = drift(&shifted(&x, &k2, 0.5 * h))?;
        let k4 = drift(&shifted(&x, &k3, h))?;
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        traj.push(&x);
    }
    Ok(traj)
}

/// Hasminskii blocks of `[0, T/ε]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionScheme {
    pub epsilon: f64,
    pub t_total: f64,
    pub n: usize,
    /// Block length `T / (ε n)`.
    pub t_eps: f64,
    pub dt: f64,
    /// Block boundaries in steps, `n + 1` of them, from 0 to `T / (ε dt)`.
    pub boundaries: Vec<usize>,
}

/// `n(ε) = ceil(1 / (ε (ln 1/ε)^{1/4}))`.
pub fn hasminskii_blocks(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < (-1.0f64).exp()) {
        return Err(invalid(format!("epsilon = {epsilon} must lie in (0, 1/e)")));
    }
    Ok((1.0 / (epsilon * (1.0 / epsilon).ln().powf(0.25))).ceil() as usize)
}

pub fn hasminskii_partition(epsilon: f64, t_total: f64, dt: f64) -> Result<PartitionScheme> {
    partition_with_blocks(epsilon, t_total, dt, hasminskii_blocks(epsilon)?)
}

/// Partition of `[0, T/ε]` into `n` blocks; boundary `j` is the grid index
/// nearest to `j t_eps`, the last one exactly `T/ε`.
pub fn partition_with_blocks(epsilon: f64, t_total: f64, dt: f64, n: usize) -> Result<PartitionScheme> {
    if n == 0 {
        return Err(invalid("need at least one block"));
    }
    let total = steps_of(t_total / epsilon, dt, "T / epsilon")?;
    if total <= 0 {
        return Err(invalid("T must be positive"));
    }
    let total = total as usize;
    if n > total {
        return Err(invalid(format!("{n} blocks do not fit in {total} steps")));
    }
    let t_eps = t_total / (epsilon * n as f64);
    let mut boundaries: Vec<usize> = (0..n)
        .map(|j| ((j as f64 * t_eps / dt).round() as usize).min(total))
        .collect();
    boundaries.push(total);
    if boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("blocks shorter than one step"));
    }
    Ok(PartitionScheme {
        epsilon,
        t_total,
        n,
        t_eps,
        dt,
        boundaries,
    })
}

/// `Ŷ`: on each block, restarted from the true fast state `y_traj` at the
/// block start and evolved with `x` frozen at `x_traj` there, driven by the
/// same increments. Entry `j` of the result is at step `j`.
pub fn auxiliary_process<N: Noise>(
    sys: &SlowFastSystem,
    partition: &PartitionScheme,
    x_traj: &Trajectory,
    y_traj: &Trajectory,
    path: &N,
) -> Result<Trajectory> {
    let total = *partition.boundaries.last().expect("nonempty");
    if x_traj.len() < total + 1 || y_traj.len() < total + 1 {
        return Err(invalid("trajectories do not cover [0, T/epsilon]"));
    }
    let dt = path.grid().dt();
    let mut stepper = Stepper::new(sys, dt)?;
    let origin = path.grid().origin_index();
    let mut out = Trajectory::with_capacity(0.0, dt, y_traj.state(0), total + 1);
    for w in partition.boundaries.windows(2) {
        let (b0, b1) = (w[0], w[1]);
        let x = x_traj.state(b0).to_vec();
        let mut y = y_traj.state(b0).to_vec();
        let len = b1 - b0;
        stepper.run_fast(&x, &mut y, b0, path, origin + b0 as i64, len, |j, y| {
            if j < len {
                out.push(y);
            }
        })?;
        // restart: the block end carries the true state
        out.push(y_traj.state(b1));
    }
    Ok(out)
}

/// `sup_j |Ỹ_j - Ŷ_j|²`.
pub fn sup_sq_deviation(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states()
        .zip(b.states())
        .map(|(u, v)| dist(u, v).powi(2))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorStudyConfig {
    pub dt: f64,
    /// Run `i` uses the path with seed `derive_seed(base_seed, i)` for every ε.
    pub base_seed: u64,
    pub pullback: PullbackConfig,
    /// Pullback anchor for the initial fast states; zero when absent.
    pub anchor: Option<Vec<f64>>,
    /// Record the per-block discrepancy.
    pub verbose: bool,
}

impl Default for ErrorStudyConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            base_seed: 2024,
            pullback: PullbackConfig::default(),
            anchor: None,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragingErrorReport {
    pub epsilon: f64,
    pub t_total: f64,
    pub n_mc: usize,
    pub sup_errors: Vec<f64>,
    pub mean: f64,
    pub se: f64,
    pub pullback_unconverged: usize,
    /// Mean over runs of `ε ∫_block (F(X, Y) - F̄(X)) dt` per Hasminskii
    /// block (first slow coordinate); only in verbose mode.
    pub block_discrepancy: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorStudy {
    pub reports: Vec<AveragingErrorReport>,
    /// Means decrease along the ε list up to 2 combined standard errors.
    pub monotone: bool,
}

/// For each ε: `n_mc` coupled runs from `x0` with the fast state drawn as the
/// pullback value `S̃(0, ω_i)` of the run's own path, compared against the
/// averaged ODE through `sup_t |X_t - X̄_t|`.
pub fn averaging_error_study(
    sys: &SlowFastSystem,
    x0: &[f64],
    epsilons: &[f64],
    t_total: f64,
    n_mc: usize,
    drift: &(dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync),
    cfg: &ErrorStudyConfig,
) -> Result<ErrorStudy> {
    if epsilons.is_empty() || epsilons.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(invalid("epsilons must be nonempty and strictly decreasing"));
    }
    if n_mc < 30 {
        return Err(invalid("n_mc must be at least 30"));
    }
    if x0.len() != sys.slow_dim() {
        return Err(invalid("x0 has the wrong dimension"));
    }
    let anchor = cfg.anchor.clone().unwrap_or_else(|| vec![0.0; sys.fast_dim()]);
    let mut reports = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let sys_eps = sys.with_epsilon(eps)?;
        let xbar = solve_averaged_ode(drift, x0, eps, t_total, cfg.dt)?;
        let partition = if cfg.verbose {
            Some(hasminskii_partition(eps, t_total, cfg.dt)?)
        } else {
            None
        };
        let n_steps = xbar.len() - 1;
        let period = sys_eps.period_steps(cfg.dt)?;
        let runs = try_map_indexed(n_mc, |i| -> Result<(f64, bool, Option<Vec<f64>>)> {
            let path = make_path(derive_seed(cfg.base_seed, i as u64), cfg.dt, sys.noise_dim())?;
            let start = pullback_point(&sys_eps, x0, &anchor, &path, 0, &cfg.pullback)?;
            let mut x = x0.to_vec();
            let mut y = start.state.y.clone();
            let mut sup: f64 = 0.0;
            let mut blocks = partition.as_ref().map(|p| vec![0.0; p.n]);
            let mut block = 0;
            let mut step = Stepper::new(&sys_eps, cfg.dt)?;
            let mut f = vec![0.0; sys.slow_dim()];
            let mut failure = None;
            let mut x_prev = x.clone();
            let mut y_prev = y.clone();
            step.run_coupled(&mut x, &mut y, 0, &path, 0, n_steps, |j, x, y| {
                sup = sup.max(dist(x, xbar.state(j)));
                if let (Some(p), Some(b)) = (partition.as_ref(), blocks.as_mut()) {
                    // contribution of step j-1, which used the pre-step state
                    while block + 1 < p.n && j > p.boundaries[block + 1] {
                        block += 1;
                    }
                    let t = ((j - 1) % period) as f64 * cfg.dt;
                    sys_eps.slow_drift().eval_into(t, &x_prev, &y_prev, &mut f);
                    match drift(&x_prev) {
                        Ok(fb) => b[block] += eps * cfg.dt * (f[0] - fb[0]),
                        Err(e) => failure = Some(e),
                    }
                    x_prev.copy_from_slice(x);
                    y_prev.copy_from_slice(y);
                }
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            Ok((sup, start.converged, blocks))
        })?;
        let sup_errors: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let ms: MeanSe = mean_se(&sup_errors);
        let block_discrepancy = partition.as_ref().map(|p| {
            let mut acc = vec![0.0; p.n];
            for r in &runs {
                if let Some(b) = &r.2 {
                    for (a, v) in acc.iter_mut().zip(b) {
                        *a += v / n_mc as f64;
                    }
                }
            }
            acc
        });
        reports.push(AveragingErrorReport {
            epsilon: eps,
            t_total,
            n_mc,
            mean: ms.mean,
            se: ms.se,
            pullback_unconverged: runs.iter().filter(|r| !r.1).count(),
            sup_errors,
            block_discrepancy,
        });
    }
    let monotone = reports.windows(2).all(|w| {
        let tol = 2.0 * (w[0].se * w[0].se + w[1].se * w[1].se).sqrt();
        w[1].mean <= w[0].mean + tol
    });
    Ok(ErrorStudy { reports, monotone })
}
