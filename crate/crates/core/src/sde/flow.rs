//! Euler–Maruyama flows of the frozen fast subsystem, the coupled slow-fast
//! system and the lifted system on the cylinder.
//!
//! Coefficients are always evaluated at the phase time `(k mod P) * dt`,
//! where `k` is the step index and `P = τ / dt`. Together with increments
//! addressed by step index this makes the discrete flow an exact function
//! of `(phase, increments)`, so the cocycle and τ-shift identities hold
//! bit-for-bit.

use super::field::VectorField;
use super::system::{LiftedState, SlowFastSystem, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::noise::Noise;

/// Any coordinate above this magnitude aborts the integration.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

#[inline]
fn check_finite(t: f64, state: &[f64]) -> Result<()> {
    if state.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP_THRESHOLD) {
        return Err(Error::NumericalBlowup {
            t,
            state: state.to_vec(),
        });
    }
    Ok(())
}

#[inline]
fn em_update(y: &mut [f64], drift: &[f64], diff: &[f64], dw: &[f64], dt: f64) {
    let m = dw.len();
    for (i, yi) in y.iter_mut().enumerate() {
        let mut noise = 0.0;
        for k in 0..m {
            noise += diff[i * m + k] * dw[k];
        }
        *yi = *yi + drift[i] * dt + noise;
    }
}

/// One Euler–Maruyama step `state + drift(t, x, state) dt + diffusion(t, x, state) dW`.
pub fn em_step(
    state: &[f64],
    t: f64,
    x: &[f64],
    drift: &VectorField,
    diffusion: &VectorField,
    dw: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    if drift.rows() != state.len() || diffusion.rows() != state.len() || diffusion.cols() != dw.len() {
        return Err(invalid("em_step: dimension mismatch"));
    }
    let b = drift.eval(t, x, state);
    let s = diffusion.eval(t, x, state);
    let mut next = state.to_vec();
    em_update(&mut next, &b, &s, dw, dt);
    check_finite(t + dt, &next)?;
    Ok(next)
}

/// Reusable Euler–Maruyama stepper with scratch buffers.
pub struct Stepper<'a> {
    sys: &'a SlowFastSystem,
    dt: f64,
    period: usize,
    drift: Vec<f64>,
    diff: Vec<f64>,
    slow: Vec<f64>,
    dw: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(sys: &'a SlowFastSystem, dt: f64) -> Result<Self> {
        let period = sys.period_steps(dt)?;
        Ok(Self {
            sys,
            dt,
            period,
            drift: vec![0.0; sys.fast_dim()],
            diff: vec![0.0; sys.fast_dim() * sys.noise_dim()],
            slow: vec![0.0; sys.slow_dim()],
            dw: vec![0.0; sys.noise_dim()],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn period(&self) -> usize {
        self.period
    }

    fn check_noise<N: Noise>(&self, path: &N) -> Result<()> {
        if path.dims() != self.sys.noise_dim() {
            return Err(invalid(format!(
                "path has {} dimensions, system needs {}",
                path.dims(),
                self.sys.noise_dim()
            )));
        }
        let pdt = path.grid().dt();
        if pdt != self.dt {
            return Err(invalid(format!("path dt {pdt} differs from stepper dt {}", self.dt)));
        }
        Ok(())
    }

    #[inline]
    fn phase_time(&self, phase: usize) -> f64 {
        (phase % self.period) as f64 * self.dt
    }

    /// Advances the frozen fast subsystem `n` steps. Step `j` uses phase
    /// `phase0 + j` and the increment with index `first_index + j`;
    /// `observe(j + 1, y)` is called after each step.
    pub fn run_fast<N: Noise>(
        &mut self,
        x: &[f64],
        y: &mut [f64],
        phase0: usize,
        path: &N,
        first_index: i64,
        n: usize,
        mut observe: impl FnMut(usize, &[f64]),
    ) -> Result<()> {
        self.check_noise(path)?;
        let sys = self.sys;
        let mut phase = phase0 % self.period;
        for j in 0..n {
            let t = self.phase_time(phase);
            let index = first_index + j as i64;
            path.fill_increment(index, &mut self.dw);
            sys.fast_drift().eval_into(t, x, y, &mut self.drift);
            sys.diffusion().eval_into(t, x, y, &mut self.diff);
            em_update(y, &self.drift, &self.diff, &self.dw, self.dt);
            check_finite(path.grid().time(index + 1), y)?;
            phase += 1;
            if phase == self.period {
                phase = 0;
            }
            observe(j + 1, y);
        }
        Ok(())
    }

    /// Advances the coupled system `n` steps in the original time scale;
    /// `observe(j + 1, x, y)` after each step.
    pub fn run_coupled<N: Noise>(
        &mut self,
        x: &mut [f64],
        y: &mut [f64],
        phase0: usize,
        path: &N,
        first_index: i64,
        n: usize,
        mut observe: impl FnMut(usize, &[f64], &[f64]),
    ) -> Result<()> {
        self.check_noise(path)?;
        let sys = self.sys;
        let eps_dt = sys.epsilon() * self.dt;
        let mut phase = phase0 % self.period;
        for j in 0..n {
            let t = self.phase_time(phase);
            let index = first_index + j as i64;
            path.fill_increment(index, &mut self.dw);
            sys.slow_drift().eval_into(t, x, y, &mut self.slow);
            sys.fast_drift().eval_into(t, x, y, &mut self.drift);
            sys.diffusion().eval_into(t, x, y, &mut self.diff);
            em_update(y, &self.drift, &self.diff, &self.dw, self.dt);
            for (xi, fi) in x.iter_mut().zip(&self.slow) {
                *xi += fi * eps_dt;
            }
            let time = path.grid().time(index + 1);
            check_finite(time, y)?;
            check_finite(time, x)?;
            phase += 1;
            if phase == self.period {
                phase = 0;
            }
            observe(j + 1, x, y);
        }
        Ok(())
    }
}

fn check_dims(sys: &SlowFastSystem, x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != sys.slow_dim() || y.len() != sys.fast_dim() {
        return Err(invalid(format!(
            "state dimensions ({}, {}) do not match system ({}, {})",
            x.len(),
            y.len(),
            sys.slow_dim(),
            sys.fast_dim()
        )));
    }
    Ok(())
}

/// Trajectory of the frozen fast subsystem on `[t0, t1]`, driven by the
/// path increments at their absolute step indices.
pub fn simulate_fast<N: Noise>(
    sys: &SlowFastSystem,
    x_frozen: &[f64],
    y0: &[f64],
    path: &N,
    t0: f64,
    t1: f64,
) -> Result<Trajectory> {
    check_dims(sys, x_frozen, y0)?;
    let grid = path.grid();
    let i0 = grid.index_of(t0)?;
    let i1 = grid.index_of(t1)?;
    if i1 <= i0 {
        return Err(invalid(format!("need t0 < t1, got [{t0}, {t1}]")));
    }
    let mut stepper = Stepper::new(sys, grid.dt())?;
    let phase0 = i0.rem_euclid(stepper.period() as i64) as usize;
    let n = (i1 - i0) as usize;
    let mut traj = Trajectory::with_capacity(t0, grid.dt(), y0, n + 1);
    let mut y = y0.to_vec();
    stepper.run_fast(x_frozen, &mut y, phase0, path, i0, n, |_, y| traj.push(y))?;
    Ok(traj)
}

/// Coupled slow and fast trajectories on `[0, t_end]`, in the time scale of
/// the original equation where `t_end` is typically `T / ε`.
pub fn simulate_slow_fast<N: Noise>(
    sys: &SlowFastSystem,
    x0: &[f64],
    y0: &[f64],
    path: &N,
    t_end: f64,
) -> Result<(Trajectory, Trajectory)> {
    check_dims(sys, x0, y0)?;
    let grid = path.grid();
    let n = grid.steps(t_end)?;
    if n <= 0 {
        return Err(invalid("t_end must be positive"));
    }
    let n = n as usize;
    let mut stepper = Stepper::new(sys, grid.dt())?;
    let mut slow = Trajectory::with_capacity(0.0, grid.dt(), x0, n + 1);
    let mut fast = Trajectory::with_capacity(0.0, grid.dt(), y0, n + 1);
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    stepper.run_coupled(&mut x, &mut y, 0, path, grid.origin_index(), n, |_, x, y| {
        slow.push(x);
        fast.push(y);
    })?;
    Ok((slow, fast))
}

/// Lifted flow `Φ(t, ω, (s, y)) = (s + t mod τ, Y_{s, s+t}(θ_{-s} ω) y)`.
///
/// The increments consumed are those of `path` on `[0, t)`.
pub fn lifted_flow<N: Noise>(
    sys: &SlowFastSystem,
    x_frozen: &[f64],
    state: &LiftedState,
    path: &N,
    t: f64,
) -> Result<LiftedState> {
    check_dims(sys, x_frozen, &state.y)?;
    let grid = path.grid();
    let n = grid.steps(t)?;
    if n < 0 {
        return Err(invalid("lifted flow needs t >= 0"));
    }
    let mut stepper = Stepper::new(sys, grid.dt())?;
    let period = stepper.period();
    if state.phase >= period {
        return Err(invalid("lifted state phase outside [0, tau)"));
    }
    let mut y = state.y.clone();
    stepper.run_fast(
        x_frozen,
        &mut y,
        state.phase,
        path,
        grid.origin_index(),
        n as usize,
        |_, _| {},
    )?;
    let phase = (state.phase + n as usize) % period;
    Ok(LiftedState::new(phase, grid.dt(), y))
}
