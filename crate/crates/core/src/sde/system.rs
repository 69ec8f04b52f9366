use serde::Serialize;

use super::field::VectorField;
use crate::error::{invalid, Result};
use crate::noise::{steps_of, CounterRng};

/// Slow-fast system
///
/// ```text
/// dX = ε F(X, Y) dt
/// dY = b(t, X, Y) dt + σ(t, X, Y) dW
/// ```
///
/// with `b` and `σ` periodic in `t` with period `tau`.
#[derive(Debug, Clone)]
pub struct SlowFastSystem {
    pub name: String,
    slow_dim: usize,
    fast_dim: usize,
    noise_dim: usize,
    tau: f64,
    epsilon: f64,
    slow_drift: VectorField,
    fast_drift: VectorField,
    diffusion: VectorField,
}

impl SlowFastSystem {
    /// Builds and validates a system. `diffusion` is a `fast_dim x noise_dim`
    /// matrix field. Periodicity of `b` and `σ` is checked on sampled points.
    pub fn new(
        name: impl Into<String>,
        tau: f64,
        epsilon: f64,
        slow_drift: VectorField,
        fast_drift: VectorField,
        diffusion: VectorField,
    ) -> Result<Self> {
        let slow_dim = slow_drift.rows();
        let fast_dim = fast_drift.rows();
        let noise_dim = diffusion.cols();
        if slow_dim == 0 || fast_dim == 0 || noise_dim == 0 {
            return Err(invalid("all dimensions must be positive"));
        }
        if slow_drift.cols() != 1 || fast_drift.cols() != 1 {
            return Err(invalid("drifts must be vector fields"));
        }
        if diffusion.rows() != fast_dim {
            return Err(invalid(format!(
                "diffusion has {} rows, fast dimension is {fast_dim}",
                diffusion.rows()
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid(format!("tau must be positive, got {tau}")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        let sys = Self {
            name: name.into(),
            slow_dim,
            fast_dim,
            noise_dim,
            tau,
            epsilon,
            slow_drift,
            fast_drift,
            diffusion,
        };
        sys.check_periodic(64)?;
        Ok(sys)
    }

    fn check_periodic(&self, n_points: usize) -> Result<()> {
        let mut rng = CounterRng::new(0x7065_7269, 11);
        let mut x = vec![0.0; self.slow_dim];
        let mut y = vec![0.0; self.fast_dim];
        for _ in 0..n_points {
            let t = rng.uniform_in(-self.tau, self.tau);
            x.iter_mut().for_each(|v| *v = rng.uniform_in(-2.0, 2.0));
            y.iter_mut().for_each(|v| *v = rng.uniform_in(-2.0, 2.0));
            for (field, what) in [(&self.fast_drift, "drift"), (&self.diffusion, "diffusion")] {
                let a = field.eval(t, &x, &y);
                let b = field.eval(t + self.tau, &x, &y);
                if a.iter().chain(&b).any(|v| !v.is_finite()) {
                    return Err(invalid(format!("fast {what} is not finite at t = {t}")));
                }
                let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                if a.iter().zip(&b).any(|(u, v)| (u - v).abs() > 1e-9 * scale) {
                    return Err(invalid(format!("fast {what} is not {}-periodic at t = {t}", self.tau)));
                }
            }
        }
        Ok(())
    }

    /// Same system with a different scale separation.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        let mut s = self.clone();
        s.epsilon = epsilon;
        Ok(s)
    }

    pub fn with_slow_drift(&self, slow_drift: VectorField) -> Result<Self> {
        if slow_drift.rows() != self.slow_dim || slow_drift.cols() != 1 {
            return Err(invalid("slow drift has the wrong shape"));
        }
        let mut s = self.clone();
        s.slow_drift = slow_drift;
        Ok(s)
    }

    pub fn slow_dim(&self) -> usize {
        self.slow_dim
    }
    pub fn fast_dim(&self) -> usize {
        self.fast_dim
    }
    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn slow_drift(&self) -> &VectorField {
        &self.slow_drift
    }
    pub fn fast_drift(&self) -> &VectorField {
        &self.fast_drift
    }
    pub fn diffusion(&self) -> &VectorField {
        &self.diffusion
    }

    /// Number of grid steps in one period; `tau` must be a multiple of `dt`.
    pub fn period_steps(&self, dt: f64) -> Result<usize> {
        let p = steps_of(self.tau, dt, "tau")?;
        if p < 1 {
            return Err(invalid("tau is shorter than one grid step"));
        }
        Ok(p as usize)
    }
}

/// Point `(s, y)` on the cylinder `S¹ x R^N`. The circle coordinate is kept
/// as an exact step count `phase` in `0..period_steps`; `s = phase * dt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftedState {
    pub phase: usize,
    pub s: f64,
    pub y: Vec<f64>,
}

impl LiftedState {
    pub fn new(phase: usize, dt: f64, y: Vec<f64>) -> Self {
        Self {
            phase,
            s: phase as f64 * dt,
            y,
        }
    }

    /// State at phase `s`, which must be a grid time in `[0, τ)`.
    pub fn at(s: f64, dt: f64, period_steps: usize, y: Vec<f64>) -> Result<Self> {
        let k = steps_of(s, dt, "phase")?;
        if k < 0 || k as usize >= period_steps {
            return Err(invalid(format!("phase {s} outside [0, tau)")));
        }
        Ok(Self::new(k as usize, dt, y))
    }
}

/// States sampled on a uniform grid; entry `j` is at time `t0 + j * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    dim: usize,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, initial: &[f64]) -> Self {
        Self {
            t0,
            dt,
            dim: initial.len(),
            data: initial.to_vec(),
        }
    }

    pub fn with_capacity(t0: f64, dt: f64, initial: &[f64], n_states: usize) -> Self {
        let mut data = Vec::with_capacity(n_states * initial.len());
        data.extend_from_slice(initial);
        Self {
            t0,
            dt,
            dim: initial.len(),
            data,
        }
    }

    pub fn push(&mut self, state: &[f64]) {
        debug_assert_eq!(state.len(), self.dim);
        self.data.extend_from_slice(state);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn state(&self, j: usize) -> &[f64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}
