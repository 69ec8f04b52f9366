use serde::{Deserialize, Serialize};

use super::EmpiricalMeasure;
use crate::error::{invalid, Error, Result};
use crate::noise::{derive_seed, make_path, steps_of};
use crate::par::try_map_indexed;
use crate::pullback::{pullback_sections, PullbackConfig};
use crate::sde::{LiftedState, SlowFastSystem};

/// Monte Carlo settings shared by the measure estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub dt: f64,
    /// Sample `i` uses the path with seed `derive_seed(base_seed, i)`.
    pub base_seed: u64,
    pub pullback: PullbackConfig,
    /// Cap on the number of section times in time-averaged measures.
    pub max_sections: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            base_seed: 1,
            pullback: PullbackConfig::default(),
            max_sections: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureSample {
    pub measure: EmpiricalMeasure,
    pub excluded: usize,
    /// Seeds of the retained samples.
    pub seeds: Vec<u64>,
}

/// Measures at several sections built from the same retained paths, so atom
/// `i` of every section comes from the same `ω_i`.
#[derive(Debug, Clone, Serialize)]
pub struct SectionSample {
    pub r_steps: Vec<usize>,
    pub sections: Vec<EmpiricalMeasure>,
    pub excluded: usize,
    pub seeds: Vec<u64>,
}

impl SectionSample {
    /// Uniform mixture of the sections.
    pub fn time_averaged(&self) -> EmpiricalMeasure {
        time_averaged(&self.sections)
    }
}

/// Evenly spaced section times, `min(period, max_sections)` of them.
pub fn section_grid(period_steps: usize, max_sections: usize) -> Vec<usize> {
    let count = period_steps.min(max_sections.max(1));
    (0..count).map(|k| k * period_steps / count).collect()
}

/// Empirical law of `S̃(r, ·)` from independent pullback samples.
pub fn empirical_periodic_measure(
    sys: &SlowFastSystem,
    x_frozen: &[f64],
    r: f64,
    n_samples: usize,
    cfg: &SamplingConfig,
) -> Result<MeasureSample> {
    let period = sys.period_steps(cfg.dt)?;
    let r_step = steps_of(r, cfg.dt, "section time r")?;
    if r_step < 0 || r_step as usize >= period {
        return Err(invalid(format!("section time {r} outside [0, tau)")));
    }
    let s = sample_sections(sys, x_frozen, &[r_step as usize], n_samples, cfg)?;
    Ok(MeasureSample {
        measure: s.sections.into_iter().next().expect("one section"),
        excluded: s.excluded,
        seeds: s.seeds,
    })
}

/// Samples `S̃(r, ω_i)` for every `r` in `r_steps` (steps, may exceed one
/// period) from one pullback run per seed. Non-converged runs are dropped;
/// more than 10% dropped is an error.
pub fn sample_sections(
    sys: &SlowFastSystem,
    x_frozen: &[f64],
    r_steps: &[usize],
    n_samples: usize,
    cfg: &SamplingConfig,
) -> Result<SectionSample> {
    if n_samples == 0 {
        return Err(invalid("n_samples must be at least 1"));
    }
    if r_steps.is_empty() {
        return Err(invalid("no section times given"));
    }
    cfg.pullback.validate()?;
    let anchor = vec![0.0; sys.fast_dim()];
    let runs = try_map_indexed(n_samples, |i| -> Result<Option<(u64, Vec<LiftedState>)>> {
        let seed = derive_seed(cfg.base_seed, i as u64);
        let path = make_path(seed, cfg.dt, sys.noise_dim())?;
        let points = pullback_sections(sys, x_frozen, &anchor, &path, r_steps, &cfg.pullback)?;
        if points.iter().all(|p| p.2) {
            Ok(Some((seed, points.into_iter().map(|p| p.0).collect())))
        } else {
            Ok(None)
        }
    })?;
    let excluded = runs.iter().filter(|r| r.is_none()).count();
    if excluded * 10 > n_samples {
        return Err(Error::TooManyExclusions {
            excluded,
            total: n_samples,
        });
    }
    let kept: Vec<(u64, Vec<LiftedState>)> = runs.into_iter().flatten().collect();
    let seeds = kept.iter().map(|k| k.0).collect();
    let sections = (0..r_steps.len())
        .map(|j| EmpiricalMeasure::uniform(kept.iter().map(|k| k.1[j].clone()).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(SectionSample {
        r_steps: r_steps.to_vec(),
        sections,
        excluded,
        seeds,
    })
}

/// Equal-weight mixture `(1/J) Σ_j μ_j`.
pub fn time_averaged(sections: &[EmpiricalMeasure]) -> EmpiricalMeasure {
    let j = sections.len() as f64;
    let mut support = Vec::new();
    let mut weights = Vec::new();
    for m in sections {
        support.extend(m.support().iter().cloned());
        weights.extend(m.weights().iter().map(|w| w / j));
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    EmpiricalMeasure::new(support, weights).expect("mixture of valid measures")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::OuParams;

    #[test]
    fn single_sample_is_a_dirac() {
        let sys = OuParams::constant(1.0, 1.0).build().unwrap();
        let cfg = SamplingConfig {
            dt: 0.01,
            ..Default::default()
        };
        let m = empirical_periodic_measure(&sys, &[0.0], 0.0, 1, &cfg).unwrap();
        assert_eq!(m.measure.len(), 1);
        assert_eq!(m.measure.weights(), &[1.0]);
    }

    #[test]
    fn off_grid_section_is_rejected() {
        let sys = OuParams::constant(1.0, 1.0).build().unwrap();
        let cfg = SamplingConfig::default();
        assert!(matches!(
            empirical_periodic_measure(&sys, &[0.0], 0.005, 2, &cfg),
            Err(Error::GridMisalignment { .. })
        ));
        assert!(empirical_periodic_measure(&sys, &[0.0], 1.0, 2, &cfg).is_err());
    }

    #[test]
    fn too_many_exclusions_fail() {
        let sys = OuParams::constant(1.0, 1.0).build().unwrap();
        let cfg = SamplingConfig {
            pullback: PullbackConfig {
                k_max: 2,
                tol: 1e-12,
                r_stride: 1,
            },
            ..Default::default()
        };
        assert!(matches!(
            empirical_periodic_measure(&sys, &[0.0], 0.0, 4, &cfg),
            Err(Error::TooManyExclusions { excluded: 4, total: 4 })
        ));
    }

    #[test]
    fn section_grid_spacing() {
        assert_eq!(section_grid(100, 4), vec![0, 25, 50, 75]);
        assert_eq!(section_grid(3, 64), vec![0, 1, 2]);
    }
}
