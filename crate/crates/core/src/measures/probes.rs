use serde::{Deserialize, Serialize};

use super::{
    bl_distance_capped, section_grid, time_averaged, CylinderBox, CylinderMetric, EmpiricalMeasure, SamplingConfig,
    DEFAULT_BL_CAP,
};
use crate::error::{invalid, Result};
use crate::noise::{derive_seed, make_path};
use crate::par::{map_indexed, try_map_indexed};
use crate::sde::{SlowFastSystem, Stepper};
use crate::stats::dist;

use super::sample_sections;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzEntry {
    pub i: usize,
    pub j: usize,
    pub separation: f64,
    pub distance: f64,
    /// `distance / separation`, 0 when the points coincide.
    pub ratio: f64,
    pub subsampled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzTable {
    pub x_list: Vec<Vec<f64>>,
    pub entries: Vec<LipschitzEntry>,
}

impl LipschitzTable {
    /// Smallest and largest ratio over pairs with positive separation.
    pub fn ratio_range(&self) -> Option<(f64, f64)> {
        let r: Vec<f64> = self
            .entries
            .iter()
            .filter(|e| e.separation > 0.0)
            .map(|e| e.ratio)
            .collect();
        if r.is_empty() {
            return None;
        }
        Some((
            r.iter().copied().fold(f64::INFINITY, f64::min),
            r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ))
    }
}

/// Ratios `d_BL(μ̄^x, μ̄^z) / |x - z|` of time-averaged measures.
///
/// Every `x` is sampled with the same seeds, so the difference between two
/// measures reflects `x` and not independent sampling noise.
pub fn measure_lipschitz_probe(
    sys: &SlowFastSystem,
    x_list: &[Vec<f64>],
    n_samples: usize,
    cfg: &SamplingConfig,
) -> Result<LipschitzTable> {
    if x_list.len() < 2 {
        return Err(invalid("need at least two slow points"));
    }
    let period = sys.period_steps(cfg.dt)?;
    let grid = section_grid(period, cfg.max_sections);
    let mut measures = Vec::with_capacity(x_list.len());
    for x in x_list {
        let s = sample_sections(sys, x, &grid, n_samples, cfg)?;
        measures.push(time_averaged(&s.sections));
    }
    let metric = CylinderMetric::new(sys.tau());
    let pairs: Vec<(usize, usize)> = (0..x_list.len())
        .flat_map(|i| (i + 1..x_list.len()).map(move |j| (i, j)))
        .collect();
    let entries = map_indexed(pairs.len(), |k| {
        let (i, j) = pairs[k];
        let separation = dist(&x_list[i], &x_list[j]);
        let out = bl_distance_capped(&measures[i], &measures[j], &metric, DEFAULT_BL_CAP);
        LipschitzEntry {
            i,
            j,
            separation,
            distance: out.value,
            ratio: if separation > 0.0 { out.value / separation } else { 0.0 },
            subsampled: out.subsampled,
        }
    });
    Ok(LipschitzTable {
        x_list: x_list.to_vec(),
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoincareConfig {
    pub dt: f64,
    pub n_paths_per_atom: usize,
    pub base_seed: u64,
}

impl Default for PoincareConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            n_paths_per_atom: 4,
            base_seed: 0x9c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareReport {
    pub hull: CylinderBox,
    pub trials: usize,
    pub hits: usize,
    pub fraction: f64,
}

/// Fraction of one-period returns from the atoms of a section measure that
/// land in `hull`. All atoms must sit on the same section.
pub fn poincare_section_check(
    measure: &EmpiricalMeasure,
    sys: &SlowFastSystem,
    x_frozen: &[f64],
    hull: &CylinderBox,
    cfg: &PoincareConfig,
) -> Result<PoincareReport> {
    let phase = measure.support()[0].phase;
    if measure.support().iter().any(|p| p.phase != phase) {
        return Err(invalid("atoms do not share one section"));
    }
    let period = sys.period_steps(cfg.dt)?;
    let npa = cfg.n_paths_per_atom.max(1);
    let trials = measure.len() * npa;
    let landed = try_map_indexed(trials, |k| -> Result<bool> {
        let (a, p) = (k / npa, k % npa);
        let seed = derive_seed(derive_seed(cfg.base_seed, a as u64), p as u64);
        let path = make_path(seed, cfg.dt, sys.noise_dim())?;
        let mut y = measure.support()[a].y.clone();
        Stepper::new(sys, cfg.dt)?.run_fast(x_frozen, &mut y, phase, &path, 0, period, |_, _| {})?;
        Ok(hull.contains(&y))
    })?;
    let hits = landed.iter().filter(|h| **h).count();
    Ok(PoincareReport {
        hull: hull.clone(),
        trials,
        hits,
        fraction: hits as f64 / trials as f64,
    })
}
