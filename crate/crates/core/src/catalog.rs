//! Built-in systems addressable by name.

use std::f64::consts::TAU as TWO_PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::oracles::{toy_averaged_drift, OuCoefficients, ToyParams};
use crate::sde::{Arity, SlowFastSystem, VectorField};

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Forced OU fast process
/// `dY = (-(a₀ + a₁ cos 2πt/τ) Y + b₁ sin 2πt/τ) dt + σ dW`
/// with slow drift `F(x, y) = c₁ y + c₂ y²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OuParams {
    pub alpha_mean: f64,
    pub alpha_amp: f64,
    pub beta_amp: f64,
    pub sigma: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub slow_linear: f64,
    pub slow_quadratic: f64,
}

impl Default for OuParams {
    fn default() -> Self {
        Self {
            alpha_mean: 2.0,
            alpha_amp: 1.0,
            beta_amp: 1.0,
            sigma: 1.0,
            tau: 1.0,
            epsilon: 0.1,
            slow_linear: 1.0,
            slow_quadratic: 0.0,
        }
    }
}

impl OuParams {
    /// Constant `α = a`, no forcing.
    pub fn constant(a: f64, sigma: f64) -> Self {
        Self {
            alpha_mean: a,
            alpha_amp: 0.0,
            beta_amp: 0.0,
            sigma,
            ..Self::default()
        }
    }

    pub fn coefficients(&self) -> OuCoefficients {
        let (a0, a1, b1, tau) = (self.alpha_mean, self.alpha_amp, self.beta_amp, self.tau);
        OuCoefficients {
            alpha: Arc::new(move |t| a0 + a1 * (TWO_PI * t / tau).cos()),
            beta: Arc::new(move |t| b1 * (TWO_PI * t / tau).sin()),
            sigma: self.sigma,
            tau,
        }
    }

    pub fn build(&self) -> Result<SlowFastSystem> {
        let (a0, a1, b1, tau, s) = (self.alpha_mean, self.alpha_amp, self.beta_amp, self.tau, self.sigma);
        let (c1, c2) = (self.slow_linear, self.slow_quadratic);
        SlowFastSystem::new(
            "ou_periodic",
            tau,
            self.epsilon,
            VectorField::vector(Arity::Y, 1, move |_, _, y, out| out[0] = c1 * y[0] + c2 * y[0] * y[0]),
            VectorField::vector(Arity::TY, 1, move |t, _, y, out| {
                let w = TWO_PI * t / tau;
                out[0] = -(a0 + a1 * w.cos()) * y[0] + b1 * w.sin();
            }),
            VectorField::matrix(Arity::TY, 1, 1, move |_, _, _, out| out[0] = s),
        )
    }
}

/// Toy system with parameters [`ToyParams`], period 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToySystemParams {
    #[serde(flatten)]
    pub toy: ToyParams,
    pub epsilon: f64,
}

impl Default for ToySystemParams {
    fn default() -> Self {
        Self {
            toy: ToyParams::default(),
            epsilon: 0.1,
        }
    }
}

impl ToySystemParams {
    pub fn build(&self) -> Result<SlowFastSystem> {
        toy_system(&self.toy, self.epsilon)
    }
}

/// The toy slow-fast system. Only γ positivity is enforced, so the
/// deterministic `β = σ = 0` variant can be built for reference runs.
pub fn toy_system(p: &ToyParams, epsilon: f64) -> Result<SlowFastSystem> {
    p.validate_gamma()?;
    let g1 = p.gamma_coeffs.clone();
    let (alpha, vartheta, beta, sigma) = (p.alpha, p.vartheta, p.beta, p.sigma);
    SlowFastSystem::new(
        "toy_turbulence",
        1.0,
        epsilon,
        VectorField::vector(Arity::XY, 1, move |_, x, y, out| {
            out[0] = y[0] * y[0] + alpha * x[0] + vartheta * x[0].powi(3)
        }),
        VectorField::vector(Arity::TXY, 1, move |t, x, y, out| {
            out[0] = -poly(&g1, x[0]) * y[0] + beta * (TWO_PI * t).cos()
        }),
        VectorField::matrix(Arity::TY, 1, 1, move |_, _, _, out| out[0] = sigma),
    )
}

/// Linear test system `dY = (-A Y + c cos 2πt/τ · 1) dt + s dW`,
/// slow drift `F(x, y) = -x + y₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearParams {
    pub a_matrix: Vec<Vec<f64>>,
    pub forcing: f64,
    pub sigma: f64,
    pub tau: f64,
    pub epsilon: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self {
            a_matrix: vec![vec![1.0]],
            forcing: 0.0,
            sigma: 1.0,
            tau: 1.0,
            epsilon: 0.1,
        }
    }
}

impl LinearParams {
    pub fn build(&self) -> Result<SlowFastSystem> {
        let n = self.a_matrix.len();
        if n == 0 || self.a_matrix.iter().any(|r| r.len() != n) {
            return Err(invalid("a_matrix must be square and nonempty"));
        }
        let a: Vec<f64> = self.a_matrix.iter().flatten().copied().collect();
        let (c, s, tau) = (self.forcing, self.sigma, self.tau);
        SlowFastSystem::new(
            "linear_test",
            tau,
            self.epsilon,
            VectorField::vector(Arity::XY, 1, |_, x, y, out| out[0] = -x[0] + y[0]),
            VectorField::vector(Arity::TY, n, move |t, _, y, out| {
                let f = c * (TWO_PI * t / tau).cos();
                for i in 0..n {
                    out[i] = f - (0..n).map(|j| a[i * n + j] * y[j]).sum::<f64>();
                }
            }),
            VectorField::matrix(Arity::TY, n, n, move |_, _, _, out| {
                out.fill(0.0);
                for i in 0..n {
                    out[i * n + i] = s;
                }
            }),
        )
    }
}

/// Scalar polynomial family (`d = N = 1`), all coefficients in increasing degree:
///
/// ```text
/// F(x, y)    = P_slow_x(x) + P_slow_y(y)
/// b(t, x, y) = P_fast_y(y) - P_gamma(x) y + c cos 2πt/τ + s sin 2πt/τ
/// σ(t, x, y) = P_diffusion(y)
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolynomialParams {
    pub slow_x: Vec<f64>,
    pub slow_y: Vec<f64>,
    pub fast_y: Vec<f64>,
    pub gamma_x: Vec<f64>,
    pub forcing_cos: f64,
    pub forcing_sin: f64,
    pub diffusion: Vec<f64>,
    pub tau: f64,
    pub epsilon: f64,
}

impl Default for PolynomialParams {
    fn default() -> Self {
        Self {
            slow_x: vec![0.0, -1.0],
            slow_y: vec![0.0, 0.0, 1.0],
            fast_y: vec![0.0, -1.0],
            gamma_x: vec![],
            forcing_cos: 1.0,
            forcing_sin: 0.0,
            diffusion: vec![1.0],
            tau: 1.0,
            epsilon: 0.1,
        }
    }
}

impl PolynomialParams {
    pub fn build(&self) -> Result<SlowFastSystem> {
        let p = self.clone();
        let q = self.clone();
        let diffusion = self.diffusion.clone();
        let tau = self.tau;
        SlowFastSystem::new(
            "polynomial",
            tau,
            self.epsilon,
            VectorField::vector(Arity::XY, 1, move |_, x, y, out| {
                out[0] = poly(&p.slow_x, x[0]) + poly(&p.slow_y, y[0])
            }),
            VectorField::vector(Arity::TXY, 1, move |t, x, y, out| {
                let w = TWO_PI * t / tau;
                out[0] = poly(&q.fast_y, y[0]) - poly(&q.gamma_x, x[0]) * y[0]
                    + q.forcing_cos * w.cos()
                    + q.forcing_sin * w.sin();
            }),
            VectorField::matrix(Arity::Y, 1, 1, move |_, _, y, out| out[0] = poly(&diffusion, y[0])),
        )
    }
}

/// A catalog system with its parameters, as named in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SystemSpec {
    OuPeriodic(OuParams),
    ToyTurbulence(ToySystemParams),
    LinearTest(LinearParams),
    Polynomial(PolynomialParams),
}

impl SystemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SystemSpec::OuPeriodic(_) => "ou_periodic",
            SystemSpec::ToyTurbulence(_) => "toy_turbulence",
            SystemSpec::LinearTest(_) => "linear_test",
            SystemSpec::Polynomial(_) => "polynomial",
        }
    }

    pub fn build(&self) -> Result<SlowFastSystem> {
        match self {
            SystemSpec::OuPeriodic(p) => p.build(),
            SystemSpec::ToyTurbulence(p) => p.build(),
            SystemSpec::LinearTest(p) => p.build(),
            SystemSpec::Polynomial(p) => p.build(),
        }
    }

    pub fn tau(&self) -> f64 {
        match self {
            SystemSpec::OuPeriodic(p) => p.tau,
            SystemSpec::ToyTurbulence(_) => 1.0,
            SystemSpec::LinearTest(p) => p.tau,
            SystemSpec::Polynomial(p) => p.tau,
        }
    }

    /// Closed-form averaged drift, where one is known.
    pub fn closed_form_drift(&self) -> Option<ClosedFormDrift> {
        match self {
            SystemSpec::ToyTurbulence(p) => {
                let toy = p.toy.clone();
                Some(Arc::new(move |x: &[f64]| Ok(vec![toy_averaged_drift(x[0], &toy)?])))
            }
            _ => None,
        }
    }
}

pub type ClosedFormDrift = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_builds() {
        for spec in [
            SystemSpec::OuPeriodic(OuParams::default()),
            SystemSpec::ToyTurbulence(ToySystemParams::default()),
            SystemSpec::LinearTest(LinearParams::default()),
            SystemSpec::Polynomial(PolynomialParams::default()),
        ] {
            let sys = spec.build().unwrap();
            assert_eq!(sys.name, spec.name());
            assert_eq!(sys.tau(), spec.tau());
        }
    }

    #[test]
    fn toy_closed_form_is_exposed() {
        let spec = SystemSpec::ToyTurbulence(ToySystemParams::default());
        let f = spec.closed_form_drift().unwrap();
        assert!(f(&[0.0]).unwrap()[0] > 0.5);
        assert!(SystemSpec::OuPeriodic(OuParams::default())
            .closed_form_drift()
            .is_none());
    }

    #[test]
    fn non_periodic_fast_drift_is_rejected() {
        let r = SlowFastSystem::new(
            "bad",
            1.0,
            0.1,
            VectorField::zero(Arity::XY, 1, 1),
            VectorField::of_ty(1, |t, y, out| out[0] = -y[0] + t),
            VectorField::zero(Arity::TY, 1, 1),
        );
        assert!(r.is_err());
    }

    #[test]
    fn bad_epsilon_is_rejected() {
        let p = OuParams {
            epsilon: 1.5,
            ..OuParams::default()
        };
        assert!(p.build().is_err());
    }
}
