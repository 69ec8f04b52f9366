//! Small statistics helpers shared by the estimators.

use serde::Serialize;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance. NaN for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    let se = if n < 2 { 0.0 } else { (variance(xs) / n as f64).sqrt() };
    MeanSe { mean: mean(xs), se, n }
}

/// Sample variance together with its standard error, `sqrt((m4 - s^4) / n)`.
pub fn variance_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    let m = mean(xs);
    let var = variance(xs);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n as f64;
    let se = ((m4 - var * var).max(0.0) / n as f64).sqrt();
    MeanSe { mean: var, se, n }
}

/// Batch-means estimate for a correlated series.
///
/// The series is cut into `n_batches` contiguous batches of equal length (a
/// remainder at the end is dropped) and the standard error is taken from the
/// spread of the batch means.
pub fn batch_means(series: &[f64], n_batches: usize) -> MeanSe {
    assert!(n_batches >= 2, "need at least two batches");
    let len = series.len() / n_batches;
    assert!(len > 0, "series shorter than the batch count");
    let means: Vec<f64> = series.chunks_exact(len).take(n_batches).map(mean).collect();
    mean_se(&means)
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
