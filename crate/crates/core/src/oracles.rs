//! Closed-form oracles for the periodically forced Ornstein–Uhlenbeck
//! process and for the quadratic-observable toy system.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::noise::{steps_of, Noise};
use crate::quad::{gauss_legendre, integrate};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Coefficients of `dZ = (-α(t) Z + β(t)) dt + σ dW` with period `tau`.
#[derive(Clone)]
pub struct OuCoefficients {
    pub alpha: ScalarFn,
    pub beta: ScalarFn,
    pub sigma: f64,
    pub tau: f64,
}

impl fmt::Debug for OuCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OuCoefficients")
            .field("sigma", &self.sigma)
            .field("tau", &self.tau)
            .finish_non_exhaustive()
    }
}

impl OuCoefficients {
    pub fn mean_alpha(&self) -> f64 {
        let a = self.alpha.clone();
        integrate(move |t| a(t), 0.0, self.tau, 32, 8) / self.tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuOracleValue {
    pub value: f64,
    /// `exp(-mean(α) · truncation_periods · τ)`.
    pub truncation_bound: f64,
}

/// Random periodic solution of the forced OU process,
///
/// ```text
/// S(t, ω) = ∫_{-∞}^t e^{-∫_s^t α} β(s) ds + σ ∫_{-∞}^t e^{-∫_s^t α} dW_s,
/// ```
///
/// truncated to `[t - K τ, t]` and discretized on the path's grid with the
/// same increments an Euler–Maruyama run would consume: the forcing entering
/// over step `j` is `β(t_j) dt + σ ΔW_j` and is damped by `exp(-∫_{t_{j+1}}^t α)`.
pub fn ou_random_periodic_oracle<N: Noise>(
    coef: &OuCoefficients,
    path: &N,
    t: f64,
    truncation_periods: usize,
) -> Result<OuOracleValue> {
    if truncation_periods < 5 {
        return Err(invalid("truncation_periods must be at least 5"));
    }
    let mean_alpha = coef.mean_alpha();
    if mean_alpha <= 0.0 {
        return Err(invalid(format!(
            "mean of alpha over a period must be positive, got {mean_alpha}"
        )));
    }
    if path.dims() != 1 {
        return Err(invalid("OU oracle needs a one-dimensional path"));
    }
    let grid = path.grid();
    let dt = grid.dt();
    let period = steps_of(coef.tau, dt, "tau")?;
    let end = grid.index_of(t)?;
    let start = end - truncation_periods as i64 * period;
    let (nodes, weights) = gauss_legendre(3);
    let cell_integral = |j: i64| {
        let lo = grid.time(j);
        let mid = lo + 0.5 * dt;
        nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * (coef.alpha)(mid + 0.5 * dt * x))
            .sum::<f64>()
            * 0.5
            * dt
    };
    let mut damping: f64 = 0.0; // ∫_{t_{j+1}}^t α
    let mut value = 0.0;
    let mut dw = [0.0];
    for j in (start..end).rev() {
        path.fill_increment(j, &mut dw);
        let forcing = (coef.beta)(grid.time(j)) * dt + coef.sigma * dw[0];
        value += (-damping).exp() * forcing;
        damping += cell_integral(j);
    }
    Ok(OuOracleValue {
        value,
        truncation_bound: (-mean_alpha * truncation_periods as f64 * coef.tau).exp(),
    })
}

/// Parameters of the toy system
///
/// ```text
/// dX = ε (Y² + α X + ϑ X³) dt
/// dY = (-γ(X) Y + β cos 2πt) dt + σ dW
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyParams {
    pub alpha: f64,
    pub vartheta: f64,
    pub beta: f64,
    pub sigma: f64,
    /// Coefficients of γ in increasing degree.
    pub gamma_coeffs: Vec<f64>,
    /// Interval on which γ > 0 is validated.
    pub x_range: [f64; 2],
}

impl Default for ToyParams {
    fn default() -> Self {
        Self {
            alpha: -1.0,
            vartheta: -0.1,
            beta: 1.0,
            sigma: 1.0,
            gamma_coeffs: vec![1.0, 0.0, 1.0],
            x_range: [-5.0, 5.0],
        }
    }
}

impl ToyParams {
    pub fn gamma(&self, x: f64) -> f64 {
        self.gamma_coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta == 0.0 {
            return Err(invalid("toy system needs beta != 0"));
        }
        if self.sigma == 0.0 {
            return Err(invalid("toy system needs sigma != 0"));
        }
        self.validate_gamma()
    }

    /// Positivity of γ on `x_range` only; the degenerate `β = 0` or `σ = 0`
    /// variants are allowed for deterministic test cases.
    pub fn validate_gamma(&self) -> Result<()> {
        let [lo, hi] = self.x_range;
        if !(lo < hi) {
            return Err(invalid("x_range must be increasing"));
        }
        for k in 0..=1000 {
            let x = lo + (hi - lo) * k as f64 / 1000.0;
            if self.gamma(x) <= 0.0 {
                return Err(invalid(format!("gamma({x}) = {} is not positive", self.gamma(x))));
            }
        }
        Ok(())
    }
}

/// `v(t) = ∫_{-∞}^t e^{-γ (t-s)} cos(2πs) ds = (γ cos 2πt + 2π sin 2πt) / (4π² + γ²)`.
pub fn toy_v(t: f64, gamma: f64) -> f64 {
    let w = 2.0 * PI;
    (gamma * (w * t).cos() + w * (w * t).sin()) / (w * w + gamma * gamma)
}

/// `∫_0^1 v(t)² dt` by composite Gauss–Legendre quadrature.
///
/// Analytically this is `(1/2) / (γ² + 4π²)`. The closed form
/// `2 / (γ² + 4π²)`, four times larger, is sometimes quoted for the same
/// integral; see [`toy_v2_integral_alt`].
pub fn toy_v2_integral(gamma: f64) -> f64 {
    integrate(|t| toy_v(t, gamma).powi(2), 0.0, 1.0, 16, 16)
}

/// The alternative closed form `2 / (γ² + 4π²)`, kept only so reports can
/// show it next to the quadrature value.
pub fn toy_v2_integral_alt(gamma: f64) -> f64 {
    2.0 / (gamma * gamma + 4.0 * PI * PI)
}

/// Averaged slow drift of the toy system,
/// `σ² / (2γ(x)) + β² ∫_0^1 v² dt + α x + ϑ x³`.
pub fn toy_averaged_drift(x: f64, params: &ToyParams) -> Result<f64> {
    let g = params.gamma(x);
    if g <= 0.0 {
        return Err(invalid(format!("gamma({x}) = {g} is not positive")));
    }
    Ok(params.sigma.powi(2) / (2.0 * g)
        + params.beta.powi(2) * toy_v2_integral(g)
        + params.alpha * x
        + params.vartheta * x.powi(3))
}
