//! Numerical checks of the structural assumptions: contraction under
//! synchronous coupling, dissipativity constants, Lie-bracket rank and the
//! continuity of the frozen semigroup.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measures::{CylinderBox, CylinderMetric};
use crate::noise::{derive_seed, make_path, CounterRng, Noise};
use crate::par::{map_indexed, try_map_indexed};
use crate::sde::{lifted_flow, Arity, LiftedState, SlowFastSystem, Stepper, VectorField};
use crate::stats::{mean_se, norm};

pub type LyapunovFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Lyapunov function `V(t, y)` with `|y|^p <= V <= C |y|^p`.
#[derive(Clone)]
pub struct LyapunovHandle {
    pub v: LyapunovFn,
    pub p: f64,
    pub c: f64,
}

impl fmt::Debug for LyapunovHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LyapunovHandle")
            .field("p", &self.p)
            .field("c", &self.c)
            .finish()
    }
}

impl Default for LyapunovHandle {
    /// `V(t, y) = |y|²`.
    fn default() -> Self {
        Self {
            v: Arc::new(|_, y| y.iter().map(|v| v * v).sum()),
            p: 2.0,
            c: 1.0,
        }
    }
}

impl LyapunovHandle {
    /// Checks the two-sided bound, `V(t, 0) = 0` and τ-periodicity at random
    /// points of `[-scale, scale]^dim`.
    pub fn validate(&self, dim: usize, tau: f64, scale: f64, n_points: usize, seed: u64) -> Result<()> {
        if !(self.p >= 1.0) || !(self.c >= 1.0) {
            return Err(invalid("Lyapunov exponents need p >= 1 and C >= 1"));
        }
        let mut rng = CounterRng::new(seed, 0x1a9);
        let zero = vec![0.0; dim];
        for _ in 0..n_points {
            let t = rng.uniform_in(0.0, tau);
            let y: Vec<f64> = (0..dim).map(|_| rng.uniform_in(-scale, scale)).collect();
            let v = (self.v)(t, &y);
            let np = norm(&y).powf(self.p);
            let slack = 1e-12 * (1.0 + np);
            if v < np - slack || v > self.c * np + slack {
                return Err(invalid(format!("V({t}, {y:?}) = {v} violates the bounds")));
            }
            if ((self.v)(t + tau, &y) - v).abs() > 1e-12 * (1.0 + v.abs()) {
                return Err(invalid("V is not tau-periodic"));
            }
            if (self.v)(t, &zero) != 0.0 {
                return Err(invalid("V(t, 0) must vanish"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    /// `(t, λ̂(t))`, one per window, `t` at the window end.
    pub lambda_samples: Vec<(f64, f64)>,
    pub beta_hat: f64,
    /// β̂ at half the horizon agrees with β̂ at the full horizon within 10%.
    pub converged: bool,
    /// Set when the separation underflowed before the horizon.
    pub truncated_at: Option<f64>,
}

/// Synchronous coupling: both copies see the same increments. `λ̂` is the
/// slope of `ln V(t, Y^{y0}_t - Y^{z0}_t)` over windows of one period and
/// `β̂ = (1/2t) ∫_0^t λ̂` by the trapezoid rule at the largest horizon.
pub fn coupling_rate<N: Noise>(
    sys: &SlowFastSystem,
    x_frozen: &[f64],
    y0: &[f64],
    z0: &[f64],
    lyapunov: &LyapunovHandle,
    path: &N,
    horizon: f64,
) -> Result<ContractionReport> {
    if y0 == z0 {
        return Err(invalid("coupling needs y0 != z0"));
    }
    let dt = path.grid().dt();
    let n = path.grid().steps(horizon)?;
    if n <= 0 {
        return Err(invalid("horizon must be positive"));
    }
    let n = n as usize;
    let period = sys.period_steps(dt)?;
    let mut step_y = Stepper::new(sys, dt)?;
    let mut step_z = Stepper::new(sys, dt)?;
    let v_of = |y: &[f64], z: &[f64]| -> Vec<f64> { y.iter().zip(z).map(|(a, b)| a - b).collect() };
    let origin = path.grid().origin_index();
    let mut y = y0.to_vec();
    let mut z = z0.to_vec();
    let mut log_v = vec![(lyapunov.v)(0.0, &v_of(&y, &z)).ln()];
    let mut truncated_at = None;
    let mut done = 0;
    while done < n {
        let len = period.min(n - done);
        let first = origin + done as i64;
        step_y.run_fast(x_frozen, &mut y, done, path, first, len, |_, _| {})?;
        step_z.run_fast(x_frozen, &mut z, done, path, first, len, |_, _| {})?;
        done += len;
        let t = done as f64 * dt;
        let v = (lyapunov.v)(t, &v_of(&y, &z));
        if !(v > f64::MIN_POSITIVE * 1e6) {
            truncated_at = Some(t);
            break;
        }
        log_v.push(v.ln());
    }
    // window ends: multiples of the period, the last possibly shorter
    let mut ends = Vec::with_capacity(log_v.len());
    let mut acc = 0;
    for _ in 1..log_v.len() {
        acc = (acc + period).min(n);
        ends.push(acc as f64 * dt);
    }
    let mut lambda_samples = Vec::with_capacity(ends.len());
    let mut start = 0.0;
    for (w, &t_end) in ends.iter().enumerate() {
        lambda_samples.push((t_end, (log_v[w + 1] - log_v[w]) / (t_end - start)));
        start = t_end;
    }
    if lambda_samples.is_empty() {
        return Ok(ContractionReport {
            lambda_samples,
            beta_hat: f64::NEG_INFINITY,
            converged: true,
            truncated_at,
        });
    }
    let beta_up_to = |k: usize| {
        // trapezoid over (0, λ_1), (t_1, λ_1), (t_2, λ_2), ...
        let mut area = 0.0;
        let mut prev = (0.0, lambda_samples[0].1);
        for &(t, l) in &lambda_samples[..=k] {
            area += 0.5 * (t - prev.0) * (l + prev.1);
            prev = (t, l);
        }
        area / (2.0 * lambda_samples[k].0)
    };
    let last = lambda_samples.len() - 1;
    let beta_hat = beta_up_to(last);
    let half = beta_up_to(last / 2);
    let converged = beta_hat.is_finite() && (half - beta_hat).abs() <= 0.1 * beta_hat.abs();
    Ok(ContractionReport {
        lambda_samples,
        beta_hat,
        converged,
        truncated_at,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DissipativityRow {
    pub t: f64,
    pub k_hat: f64,
    pub l_hat: f64,
    pub lambda_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DissipativityTable {
    pub p: f64,
    pub n_pairs: usize,
    pub rows: Vec<DissipativityRow>,
}

/// Empirical one-sided Lipschitz constant `K̂_t` of the drift, Lipschitz
/// constant `L̂_t` (Frobenius) of the diffusion and
/// `λ̂_t = -K̂_t + ((p-1)/2) N L̂_t²`, from random pairs in `sample_box`.
pub fn dissipativity_constants(
    sys: &SlowFastSystem,
    x_frozen: &[f64],
    sample_box: &CylinderBox,
    t_grid: &[f64],
    n_pairs: usize,
    p: f64,
    seed: u64,
) -> Result<DissipativityTable> {
    if n_pairs < 100 {
        return Err(invalid("need at least 100 pairs"));
    }
    let n = sys.fast_dim();
    if sample_box.y_lo.len() != n
        || sample_box
            .y_lo
            .iter()
            .zip(&sample_box.y_hi)
            .any(|(lo, hi)| !(hi > lo) || !lo.is_finite() || !hi.is_finite())
    {
        return Err(invalid("sample box must be finite and nondegenerate"));
    }
    let mut rng = CounterRng::new(seed, 0xd155);
    let mut draw = || -> Vec<f64> {
        (0..n)
            .map(|k| rng.uniform_in(sample_box.y_lo[k], sample_box.y_hi[k]))
            .collect()
    };
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..n_pairs).map(|_| (draw(), draw())).collect();
    let rows = map_indexed(t_grid.len(), |ti| {
        let t = t_grid[ti];
        let mut k_hat = f64::INFINITY;
        let mut l_hat: f64 = 0.0;
        for (y, z) in &pairs {
            let dy: Vec<f64> = y.iter().zip(z).map(|(a, b)| a - b).collect();
            let d2: f64 = dy.iter().map(|v| v * v).sum();
            if d2 == 0.0 {
                continue;
            }
            let by = sys.fast_drift().eval(t, x_frozen, y);
            let bz = sys.fast_drift().eval(t, x_frozen, z);
            let inner: f64 = by.iter().zip(&bz).zip(&dy).map(|((a, b), d)| (a - b) * d).sum();
            k_hat = k_hat.min(-inner / d2);
            let sy = sys.diffusion().eval(t, x_frozen, y);
            let sz = sys.diffusion().eval(t, x_frozen, z);
            let fro: f64 = sy.iter().zip(&sz).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            l_hat = l_hat.max(fro / d2.sqrt());
        }
        DissipativityRow {
            t,
            k_hat,
            l_hat,
            lambda_hat: -k_hat + 0.5 * (p - 1.0) * n as f64 * l_hat * l_hat,
        }
    });
    Ok(DissipativityTable { p, n_pairs, rows })
}

/// Default finite-difference step `ε_mach^{1/3} max(1, |y|)`.
pub fn fd_step(y: &[f64]) -> f64 {
    f64::EPSILON.cbrt() * norm(y).max(1.0)
}

/// Central-difference directional derivative `D_y G(t, y) v`.
fn jvp(g: &VectorField, t: f64, x: &[f64], y: &[f64], v: &[f64], h: f64) -> Vec<f64> {
    let nv = norm(v);
    if nv == 0.0 {
        return vec![0.0; g.rows()];
    }
    let plus: Vec<f64> = y.iter().zip(v).map(|(a, b)| a + h * b / nv).collect();
    let minus: Vec<f64> = y.iter().zip(v).map(|(a, b)| a - h * b / nv).collect();
    let gp = g.eval(t, x, &plus);
    let gm = g.eval(t, x, &minus);
    gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h) * nv).collect()
}

/// `[F, G](t, y) = D_y G · F - D_y F · G` by central differences with step
/// `h` (default [`fd_step`]).
pub fn lie_bracket(f: &VectorField, g: &VectorField, t: f64, x: &[f64], y: &[f64], h: Option<f64>) -> Result<Vec<f64>> {
    if f.cols() != 1 || g.cols() != 1 || f.rows() != y.len() || g.rows() != y.len() {
        return Err(invalid("lie_bracket needs two vector fields on R^N"));
    }
    let h = h.unwrap_or_else(|| fd_step(y));
    if !(h > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    let fv = f.eval(t, x, y);
    let gv = g.eval(t, x, y);
    let dg_f = jvp(g, t, x, y, &fv, h);
    let df_g = jvp(f, t, x, y, &gv, h);
    let out: Vec<f64> = dg_f.iter().zip(&df_g).map(|(a, b)| a - b).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalBlowup { t, state: y.to_vec() });
    }
    Ok(out)
}

/// The bracket `[F, G]` as a field, differentiated on demand.
pub fn bracket_field(f: &VectorField, g: &VectorField) -> VectorField {
    let (f, g) = (f.clone(), g.clone());
    VectorField::vector(Arity::TXY, f.rows(), move |t, x, y, out| {
        let v = lie_bracket(&f, &g, t, x, y, None).unwrap_or_else(|_| vec![f64::NAN; y.len()]);
        out.copy_from_slice(&v);
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub rank: usize,
    /// First level at which `rank` was reached.
    pub level: usize,
    /// Rank of the span of levels `0..=ℓ`, for each `ℓ <= M`.
    pub rank_by_level: Vec<usize>,
}

/// Numerical rank of the span of `Σ_0 ∪ ... ∪ Σ_M` at `(t, y)`, where
/// `Σ_0 = {σ_k}` and `Σ_{ℓ+1} = {[σ_k, Z] : Z ∈ Σ_ℓ}`. Singular values below
/// `1e-8` times the largest are treated as zero.
pub fn hormander_rank(columns: &[VectorField], t: f64, x: &[f64], y: &[f64], max_level: usize) -> Result<RankReport> {
    if columns.is_empty() {
        return Err(invalid("no diffusion columns"));
    }
    let n = y.len();
    let mut level_fields: Vec<VectorField> = columns.to_vec();
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    let mut rank_by_level = Vec::with_capacity(max_level + 1);
    for level in 0..=max_level {
        if level > 0 {
            level_fields = level_fields
                .iter()
                .flat_map(|z| columns.iter().map(move |s| bracket_field(s, z)))
                .collect();
        }
        let evals = try_map_indexed(level_fields.len(), |i| -> Result<Vec<f64>> {
            let v = level_fields[i].eval(t, x, y);
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::NumericalBlowup { t, state: y.to_vec() });
            }
            Ok(v)
        })?;
        vectors.extend(evals);
        let rank = numerical_rank(&vectors, n);
        rank_by_level.push(rank);
        if rank == n {
            break;
        }
    }
    let rank = *rank_by_level.last().expect("level 0 evaluated");
    let level = rank_by_level.iter().position(|&r| r == rank).expect("present");
    // pad so that the table always covers 0..=M
    while rank_by_level.len() <= max_level {
        rank_by_level.push(rank);
    }
    Ok(RankReport {
        rank,
        level,
        rank_by_level,
    })
}

fn numerical_rank(vectors: &[Vec<f64>], n: usize) -> usize {
    let m = DMatrix::from_fn(n, vectors.len(), |i, j| vectors[j][i]);
    let sv = m.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > 1e-8 * top).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub dt: f64,
    pub n_paths: usize,
    pub base_seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            n_paths: 1000,
            base_seed: 0x5e,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemigroupRow {
    pub separation: f64,
    /// `|E φ(Φ(t, ·, ỹ)) - E φ(Φ(t, ·, z̃))|`.
    pub difference: f64,
    pub se: f64,
    pub ratio: f64,
    pub ratio_se: f64,
    pub inconclusive: bool,
}

/// Difference quotients of `P̃_t φ` over pairs of lifted points. Both points
/// of a pair are driven by the same paths.
pub fn semigroup_continuity_probe(
    sys: &SlowFastSystem,
    x_frozen: &[f64],
    phi: &(dyn Fn(&[f64]) -> f64 + Sync),
    pairs: &[(LiftedState, LiftedState)],
    t: f64,
    cfg: &ProbeConfig,
) -> Result<Vec<SemigroupRow>> {
    if t < cfg.dt {
        return Err(invalid("probe time must be at least dt"));
    }
    if cfg.n_paths < 2 {
        return Err(invalid("need at least two paths"));
    }
    let metric = CylinderMetric::new(sys.tau());
    let mut rows = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let separation = metric.distance(a, b);
        if separation == 0.0 {
            rows.push(SemigroupRow {
                separation,
                difference: 0.0,
                se: 0.0,
                ratio: 0.0,
                ratio_se: 0.0,
                inconclusive: false,
            });
            continue;
        }
        let diffs = try_map_indexed(cfg.n_paths, |p| -> Result<f64> {
            let path = make_path(derive_seed(cfg.base_seed, p as u64), cfg.dt, sys.noise_dim())?;
            let fa = lifted_flow(sys, x_frozen, a, &path, t)?;
            let fb = lifted_flow(sys, x_frozen, b, &path, t)?;
            Ok(phi(&fa.y) - phi(&fb.y))
        })?;
        let ms = mean_se(&diffs);
        rows.push(SemigroupRow {
            separation,
            difference: ms.mean.abs(),
            se: ms.se,
            ratio: ms.mean.abs() / separation,
            ratio_se: ms.se / separation,
            inconclusive: ms.se > ms.mean.abs(),
        });
    }
    Ok(rows)
}
