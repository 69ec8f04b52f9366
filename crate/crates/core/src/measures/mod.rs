//! Empirical periodic measures on the cylinder and what is computed from them.

mod kb;
mod probes;
mod sampling;
mod transport;

pub use kb::{krylov_bogolyubov_curve, KbConfig, KbCurve, KbRow};
pub use probes::{
    measure_lipschitz_probe, poincare_section_check, LipschitzEntry, LipschitzTable, PoincareConfig, PoincareReport,
};
pub use sampling::{
    empirical_periodic_measure, sample_sections, section_grid, time_averaged, MeasureSample, SamplingConfig,
    SectionSample,
};

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::noise::CounterRng;
use crate::sde::LiftedState;

/// Atom cap per measure for the exact distance computation.
pub const DEFAULT_BL_CAP: usize = 512;

/// Metric on `S¹ x R^N`: `sqrt(d_circ(s, s')² + |y - y'|²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CylinderMetric {
    pub tau: f64,
}

impl CylinderMetric {
    pub fn new(tau: f64) -> Self {
        Self { tau }
    }

    pub fn distance(&self, a: &LiftedState, b: &LiftedState) -> f64 {
        let ds = (a.s - b.s).abs();
        let dc = ds.min(self.tau - ds).max(0.0);
        let dy: f64 = a.y.iter().zip(&b.y).map(|(u, v)| (u - v) * (u - v)).sum();
        (dc * dc + dy).sqrt()
    }
}

/// Weighted sample cloud on the cylinder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    support: Vec<LiftedState>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(support: Vec<LiftedState>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(invalid("empirical measure needs at least one atom"));
        }
        if support.len() != weights.len() {
            return Err(invalid("support and weights differ in length"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(invalid("weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        let dim = support[0].y.len();
        if support.iter().any(|p| p.y.len() != dim) {
            return Err(invalid("atoms have inconsistent dimensions"));
        }
        Ok(Self { support, weights })
    }

    pub fn uniform(support: Vec<LiftedState>) -> Result<Self> {
        let n = support.len();
        Self::new(support, vec![1.0 / n as f64; n])
    }

    pub fn dirac(atom: LiftedState) -> Self {
        Self {
            support: vec![atom],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[LiftedState] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn fast_dim(&self) -> usize {
        self.support[0].y.len()
    }

    /// `∫ f(y) dμ`.
    pub fn integrate(&self, f: impl Fn(&LiftedState) -> f64) -> f64 {
        self.support.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    pub fn mass_in(&self, cyl_box: &CylinderBox) -> f64 {
        self.integrate(|p| if cyl_box.contains(&p.y) { 1.0 } else { 0.0 })
    }

    pub fn y_mean(&self) -> Vec<f64> {
        (0..self.fast_dim()).map(|k| self.integrate(|p| p.y[k])).collect()
    }

    /// Weighted standard deviation per fast coordinate.
    pub fn y_std(&self) -> Vec<f64> {
        let m = self.y_mean();
        (0..self.fast_dim())
            .map(|k| self.integrate(|p| (p.y[k] - m[k]).powi(2)).sqrt())
            .collect()
    }

    /// Systematic resampling to `cap` equally weighted atoms, after sorting
    /// by `(phase, y)`. Deterministic; coincident picks are merged.
    pub fn stratified_subsample(&self, cap: usize) -> Self {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            let (pa, pb) = (&self.support[a], &self.support[b]);
            pa.phase
                .cmp(&pb.phase)
                .then_with(|| pa.y.partial_cmp(&pb.y).unwrap_or(std::cmp::Ordering::Equal))
        });
        let mut picks: Vec<(usize, f64)> = Vec::with_capacity(cap);
        let mut cum = 0.0;
        let mut k = 0;
        for &idx in &order {
            cum += self.weights[idx];
            while k < cap && (k as f64 + 0.5) / cap as f64 <= cum {
                match picks.last_mut() {
                    Some((last, w)) if *last == idx => *w += 1.0 / cap as f64,
                    _ => picks.push((idx, 1.0 / cap as f64)),
                }
                k += 1;
            }
        }
        // round-off can leave the last few quantiles unassigned
        while k < cap {
            let idx = *order.last().expect("nonempty");
            match picks.last_mut() {
                Some((last, w)) if *last == idx => *w += 1.0 / cap as f64,
                _ => picks.push((idx, 1.0 / cap as f64)),
            }
            k += 1;
        }
        let total: f64 = picks.iter().map(|p| p.1).sum();
        Self {
            support: picks.iter().map(|(i, _)| self.support[*i].clone()).collect(),
            weights: picks.iter().map(|(_, w)| w / total).collect(),
        }
    }

    /// CSV with header `s,y_1,..,y_N,weight`.
    pub fn to_csv(&self) -> String {
        let n = self.fast_dim();
        let mut out = String::from("s");
        for k in 1..=n {
            out.push_str(&format!(",y_{k}"));
        }
        out.push_str(",weight\n");
        for (p, w) in self.support.iter().zip(&self.weights) {
            out.push_str(&fmt_f64(p.s));
            for v in &p.y {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push(',');
            out.push_str(&fmt_f64(*w));
            out.push('\n');
        }
        out
    }

    /// Uniform draw of `n` atoms with replacement, by weight.
    pub fn resample(&self, n: usize, rng: &mut CounterRng) -> Vec<LiftedState> {
        let cum: Vec<f64> = self
            .weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        (0..n)
            .map(|_| {
                let u = rng.uniform() * cum[cum.len() - 1];
                let i = cum.partition_point(|c| *c < u).min(self.len() - 1);
                self.support[i].clone()
            })
            .collect()
    }
}

/// Float formatting with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Axis-aligned box in the fast coordinates, applied on a section.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CylinderBox {
    pub y_lo: Vec<f64>,
    pub y_hi: Vec<f64>,
}

impl CylinderBox {
    pub fn new(y_lo: Vec<f64>, y_hi: Vec<f64>) -> Result<Self> {
        if y_lo.len() != y_hi.len() || y_lo.iter().zip(&y_hi).any(|(a, b)| !(a <= b)) {
            return Err(invalid("box bounds must have equal length with lo <= hi"));
        }
        Ok(Self { y_lo, y_hi })
    }

    pub fn everything(dim: usize) -> Self {
        Self {
            y_lo: vec![f64::NEG_INFINITY; dim],
            y_hi: vec![f64::INFINITY; dim],
        }
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter()
            .zip(self.y_lo.iter().zip(&self.y_hi))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Bounding box of the support, inflated by `h` per side (negative
    /// `h` deflates, never past the center).
    pub fn bounding(measure: &EmpiricalMeasure, h: f64) -> Self {
        let n = measure.fast_dim();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for p in measure.support() {
            for k in 0..n {
                lo[k] = lo[k].min(p.y[k]);
                hi[k] = hi[k].max(p.y[k]);
            }
        }
        for k in 0..n {
            let c = 0.5 * (lo[k] + hi[k]);
            lo[k] = (lo[k] - h).min(c);
            hi[k] = (hi[k] + h).max(c);
        }
        Self { y_lo: lo, y_hi: hi }
    }

    /// `mean ± k · std` box of the measure.
    pub fn sigma_box(measure: &EmpiricalMeasure, k: f64) -> Self {
        let m = measure.y_mean();
        let s = measure.y_std();
        Self {
            y_lo: m.iter().zip(&s).map(|(m, s)| m - k * s).collect(),
            y_hi: m.iter().zip(&s).map(|(m, s)| m + k * s).collect(),
        }
    }
}

/// Result of [`bl_distance_capped`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlOutcome {
    pub value: f64,
    pub subsampled: bool,
}

/// Exact bounded-Lipschitz distance; measures above [`DEFAULT_BL_CAP`]
/// atoms are subsampled first.
pub fn bl_distance(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, metric: &CylinderMetric) -> f64 {
    bl_distance_capped(mu, nu, metric, DEFAULT_BL_CAP).value
}

pub fn bl_distance_capped(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    metric: &CylinderMetric,
    cap: usize,
) -> BlOutcome {
    let mut subsampled = false;
    let shrink = |m: &EmpiricalMeasure, flag: &mut bool| {
        if m.len() > cap {
            *flag = true;
            m.stratified_subsample(cap)
        } else {
            m.clone()
        }
    };
    let mu = shrink(mu, &mut subsampled);
    let nu = shrink(nu, &mut subsampled);
    // solve in a fixed orientation so that the result is exactly symmetric
    let (mu, nu) = if orientation_key(&nu) < orientation_key(&mu) {
        (nu, mu)
    } else {
        (mu, nu)
    };
    let n = mu.len();
    let m = nu.len();
    let mut cost = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            cost[i * m + j] = metric.distance(&mu.support[i], &nu.support[j]).min(2.0);
        }
    }
    let value = transport::transport_cost(&mu.weights, &nu.weights, &cost).clamp(0.0, 2.0);
    BlOutcome { value, subsampled }
}

fn orientation_key(m: &EmpiricalMeasure) -> Vec<u64> {
    let mut key = vec![m.len() as u64];
    for (p, w) in m.support.iter().zip(&m.weights) {
        key.push(p.phase as u64);
        key.extend(p.y.iter().map(|v| v.to_bits()));
        key.push(w.to_bits());
    }
    key
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(s_phase: usize, y: &[f64]) -> LiftedState {
        LiftedState::new(s_phase, 0.01, y.to_vec())
    }

    #[test]
    fn two_point_values() {
        let metric = CylinderMetric::new(1.0);
        let a = EmpiricalMeasure::dirac(atom(0, &[0.0]));
        for (y, want) in [(0.5, 0.5), (1.0, 1.0), (5.0, 2.0)] {
            let b = EmpiricalMeasure::dirac(atom(0, &[y]));
            assert!((bl_distance(&a, &b, &metric) - want).abs() < 1e-12);
        }
        assert_eq!(bl_distance(&a, &a, &metric), 0.0);
    }

    #[test]
    fn circle_distance_wraps() {
        let metric = CylinderMetric::new(1.0);
        let a = atom(5, &[0.0]);
        let b = atom(95, &[0.0]);
        assert!((metric.distance(&a, &b) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn weights_are_validated() {
        assert!(EmpiricalMeasure::new(vec![atom(0, &[0.0])], vec![0.5]).is_err());
        assert!(EmpiricalMeasure::new(vec![], vec![]).is_err());
        assert!(EmpiricalMeasure::new(vec![atom(0, &[0.0]); 2], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn subsampling_is_flagged_and_preserves_mass() {
        let support: Vec<_> = (0..100).map(|i| atom(0, &[i as f64 * 0.01])).collect();
        let mu = EmpiricalMeasure::uniform(support).unwrap();
        let sub = mu.stratified_subsample(10);
        assert_eq!(sub.len(), 10);
        assert!((sub.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let out = bl_distance_capped(&mu, &mu, &CylinderMetric::new(1.0), 10);
        assert!(out.subsampled);
        assert!(out.value.abs() < 1e-12);
        // the subsample stays close to the original in d_BL
        let d = bl_distance(&mu, &sub, &CylinderMetric::new(1.0));
        assert!(d < 0.03, "{d}");
    }

    #[test]
    fn csv_layout() {
        let mu = EmpiricalMeasure::dirac(atom(10, &[1.0, 2.0]));
        let csv = mu.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("s,y_1,y_2,weight"));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, vec![0.1, 1.0, 2.0, 1.0]);
    }
}
