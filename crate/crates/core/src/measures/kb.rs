//! Krylov–Bogolyubov convergence curves.
//!
//! For a box `A` on section `r` and starts `ỹ_i` drawn from the
//! time-averaged measure, the curve at `m` is
//! `| E_i (1/m) Σ_{k<m} P̃(0, ỹ_i; k-th visit to r, A) - μ̂_r(A) |`,
//! with the transition probabilities replaced by path averages.

use serde::{Deserialize, Serialize};

use super::{CylinderBox, EmpiricalMeasure};
use crate::error::{invalid, Result};
use crate::noise::{derive_seed, make_path, CounterRng};
use crate::par::try_map_indexed;
use crate::sde::{SlowFastSystem, Stepper};

const STREAM_STARTS: u32 = 0x4B42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KbConfig {
    pub dt: f64,
    pub n_starts: usize,
    pub n_paths: usize,
    pub m_max: usize,
    pub base_seed: u64,
}

impl Default for KbConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            n_starts: 64,
            n_paths: 16,
            m_max: 32,
            base_seed: 0x6b62,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KbRow {
    pub m: usize,
    pub discrepancy: f64,
    pub se: f64,
    /// `E_i | mean over paths - μ̂_r(A) |`; does not vanish for fixed starts.
    pub mean_abs_per_start: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KbCurve {
    pub cyl_box: CylinderBox,
    pub reference_mass: f64,
    pub rows: Vec<KbRow>,
    /// The m = 1 signal is within its own standard error.
    pub inconclusive: bool,
}

/// One curve per box. `reference` is the empirical measure on section
/// `r_step` built from `n_ref` samples; `starts` is resampled to
/// `cfg.n_starts` atoms.
pub fn krylov_bogolyubov_curve(
    sys: &SlowFastSystem,
    x_frozen: &[f64],
    r_step: usize,
    reference: &EmpiricalMeasure,
    starts: &EmpiricalMeasure,
    boxes: &[CylinderBox],
    cfg: &KbConfig,
) -> Result<Vec<KbCurve>> {
    if cfg.m_max < 2 {
        return Err(invalid("m_max must be at least 2"));
    }
    if cfg.n_starts == 0 || cfg.n_paths == 0 {
        return Err(invalid("need at least one start and one path"));
    }
    let period = sys.period_steps(cfg.dt)?;
    if r_step >= period {
        return Err(invalid("section outside [0, tau)"));
    }
    let m_max = cfg.m_max;
    let nb = boxes.len();
    let mut rng = CounterRng::new(cfg.base_seed, STREAM_STARTS);
    let start_atoms = starts.resample(cfg.n_starts, &mut rng);
    let n_paths = cfg.n_paths;

    // counts[(i * n_paths + p)][b * m_max + k] = 1 if visit k lands in box b
    let hits = try_map_indexed(cfg.n_starts * n_paths, |ip| -> Result<Vec<u8>> {
        let (i, p) = (ip / n_paths, ip % n_paths);
        let start = &start_atoms[i];
        let seed = derive_seed(derive_seed(cfg.base_seed, i as u64), p as u64);
        let path = make_path(seed, cfg.dt, sys.noise_dim())?;
        let first = (r_step + period - start.phase) % period;
        let mut out = vec![0u8; nb * m_max];
        let mut y = start.y.clone();
        let mut record = |k: usize, y: &[f64]| {
            for (b, bx) in boxes.iter().enumerate() {
                out[b * m_max + k] = bx.contains(y) as u8;
            }
        };
        let mut k0 = 0;
        if first == 0 {
            record(0, &y);
            k0 = 1;
        }
        let n = first + (m_max - 1) * period;
        let mut stepper = Stepper::new(sys, cfg.dt)?;
        if n > 0 {
            stepper.run_fast(x_frozen, &mut y, start.phase, &path, 0, n, |j, y| {
                if j >= first && (j - first).is_multiple_of(period) {
                    let k = (j - first) / period;
                    if k >= k0 {
                        record(k, y);
                    }
                }
            })?;
        }
        Ok(out)
    })?;

    let n_ref = reference.len() as f64;
    let total = (cfg.n_starts * n_paths) as f64;
    let mut curves = Vec::with_capacity(nb);
    for (b, bx) in boxes.iter().enumerate() {
        let mu = reference.mass_in(bx);
        let mut cum = vec![0.0; hits.len()];
        let mut rows = Vec::with_capacity(m_max);
        for k in 0..m_max {
            let m = (k + 1) as f64;
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            let mut start_means = vec![0.0; cfg.n_starts];
            for (ip, h) in hits.iter().enumerate() {
                cum[ip] += h[b * m_max + k] as f64;
                let c = cum[ip] / m;
                sum += c;
                sum2 += c * c;
                start_means[ip / n_paths] += c / n_paths as f64;
            }
            let mean = sum / total;
            let var = if total > 1.0 {
                ((sum2 - total * mean * mean) / (total - 1.0)).max(0.0)
            } else {
                0.0
            };
            let se = (var / total + mu * (1.0 - mu) / n_ref).sqrt();
            let mean_abs_per_start = start_means.iter().map(|s| (s - mu).abs()).sum::<f64>() / cfg.n_starts as f64;
            rows.push(KbRow {
                m: k + 1,
                discrepancy: (mean - mu).abs(),
                se,
                mean_abs_per_start,
            });
        }
        let inconclusive = rows[0].se > rows[0].discrepancy;
        curves.push(KbCurve {
            cyl_box: bx.clone(),
            reference_mass: mu,
            rows,
            inconclusive,
        });
    }
    Ok(curves)
}
