//! Two-sided Brownian increments on a fixed time grid.
//!
//! Increments are produced by a counter-based generator (Philox4x32-10) keyed
//! on the seed and addressed by `(step index, coordinate pair)`. Any step
//! index, including negative ones, can be queried in any order without
//! stored state, so the Wiener shift is just an index offset.

use crate::error::{invalid, Error, Result};

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

const STREAM_BROWNIAN: u32 = 0;
const STREAM_SEED: u32 = 0x5EED;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = (a as u64) * (b as u64);
    ((p >> 32) as u32, p as u32)
}

/// Philox4x32 with 10 rounds.
#[inline]
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

#[inline]
fn key_of(seed: u64) -> [u32; 2] {
    [seed as u32, (seed >> 32) as u32]
}

#[inline]
fn to_open_unit(bits: u64) -> f64 {
    // 53 random bits, shifted half an ulp so the result lies in (0, 1).
    ((bits >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

#[inline]
fn block_u64(seed: u64, index: u64, lane: u32, stream: u32) -> (u64, u64) {
    let out = philox4x32([index as u32, (index >> 32) as u32, lane, stream], key_of(seed));
    (
        (out[0] as u64) << 32 | out[1] as u64,
        (out[2] as u64) << 32 | out[3] as u64,
    )
}

/// Pair of independent standard normals for `(seed, index, lane)`.
#[inline]
fn normal_pair(seed: u64, index: u64, lane: u32, stream: u32) -> (f64, f64) {
    let (a, b) = block_u64(seed, index, lane, stream);
    let u1 = to_open_unit(a);
    let u2 = to_open_unit(b);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

/// Seed of the `i`-th independent sample derived from a base seed.
///
/// Derived seeds are hashed rather than offset, so runs with nearby base
/// seeds do not share sample paths.
pub fn derive_seed(base: u64, i: u64) -> u64 {
    block_u64(base, i, 0, STREAM_SEED).0
}

/// Small stateful generator over the same counter-based core, used for
/// sampling test points and resampling. Kept apart from the Brownian stream.
#[derive(Debug, Clone)]
pub struct CounterRng {
    seed: u64,
    stream: u32,
    counter: u64,
    cached: Option<u64>,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u32) -> Self {
        assert!(
            stream != STREAM_BROWNIAN && stream != STREAM_SEED,
            "stream {stream} is reserved"
        );
        Self {
            seed,
            stream,
            counter: 0,
            cached: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        if let Some(v) = self.cached.take() {
            return v;
        }
        let (a, b) = block_u64(self.seed, self.counter, 0, self.stream);
        self.counter += 1;
        self.cached = Some(b);
        a
    }

    /// Uniform on (0, 1).
    pub fn uniform(&mut self) -> f64 {
        to_open_unit(self.next_u64())
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Uniform time grid. Step `i` covers `[t_i, t_{i+1})` with
/// `t_i = (i - origin_index) * dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    origin_index: i64,
}

impl TimeGrid {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("dt must be positive and finite, got {dt}")));
        }
        Ok(Self { dt, origin_index: 0 })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn origin_index(&self) -> i64 {
        self.origin_index
    }

    pub fn time(&self, index: i64) -> f64 {
        (index - self.origin_index) as f64 * self.dt
    }

    /// Number of grid steps spanned by `duration`, which must be a multiple
    /// of `dt` to within a relative tolerance of `1e-9`.
    pub fn steps(&self, duration: f64) -> Result<i64> {
        steps_of(duration, self.dt, "duration")
    }

    /// Index of the step starting at time `t`.
    pub fn index_of(&self, t: f64) -> Result<i64> {
        Ok(steps_of(t, self.dt, "time")? + self.origin_index)
    }
}

/// `value / dt` as an integer, or a misalignment error naming `what`.
pub fn steps_of(value: f64, dt: f64, what: &str) -> Result<i64> {
    let ratio = value / dt;
    let n = ratio.round();
    if !value.is_finite() || (ratio - n).abs() > 1e-9 * n.abs().max(1.0) {
        return Err(Error::GridMisalignment {
            what: what.to_string(),
            value,
            dt,
        });
    }
    Ok(n as i64)
}

/// Source of Brownian increments indexed by grid step.
pub trait Noise: Sync {
    fn dims(&self) -> usize;

    fn grid(&self) -> TimeGrid;

    /// Writes the increment over step `index` into `out` (length `dims`).
    fn fill_increment(&self, index: i64, out: &mut [f64]);

    fn increment(&self, index: i64) -> Vec<f64> {
        let mut v = vec![0.0; self.dims()];
        self.fill_increment(index, &mut v);
        v
    }
}

/// A two-sided Brownian path `ω`, determined entirely by `(seed, dt, dims)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrownianPath {
    grid: TimeGrid,
    dims: usize,
    seed: u64,
    scale: f64,
}

/// Creates the Brownian path for `seed` with step `dt` and `dims` coordinates.
pub fn make_path(seed: u64, dt: f64, dims: usize) -> Result<BrownianPath> {
    BrownianPath::new(seed, dt, dims)
}

impl BrownianPath {
    pub fn new(seed: u64, dt: f64, dims: usize) -> Result<Self> {
        let grid = TimeGrid::new(dt)?;
        if dims == 0 {
            return Err(invalid("path dimension must be at least 1"));
        }
        Ok(Self {
            grid,
            dims,
            seed,
            scale: dt.sqrt(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl Noise for BrownianPath {
    fn dims(&self) -> usize {
        self.dims
    }

    fn grid(&self) -> TimeGrid {
        self.grid
    }

    #[inline]
    fn fill_increment(&self, index: i64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dims);
        let mut lane = 0u32;
        let mut k = 0;
        while k < self.dims {
            let (z0, z1) = normal_pair(self.seed, index as u64, lane, STREAM_BROWNIAN);
            out[k] = self.scale * z0;
            if k + 1 < self.dims {
                out[k + 1] = self.scale * z1;
            }
            k += 2;
            lane += 1;
        }
    }
}

/// The shifted path `θ_s ω`, a view with `increment(i) = base.increment(i + offset)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedPath {
    base: BrownianPath,
    offset_steps: i64,
}

impl ShiftedPath {
    pub fn base(&self) -> &BrownianPath {
        &self.base
    }

    pub fn offset_steps(&self) -> i64 {
        self.offset_steps
    }
}

impl Noise for ShiftedPath {
    fn dims(&self) -> usize {
        self.base.dims
    }

    fn grid(&self) -> TimeGrid {
        self.base.grid
    }

    #[inline]
    fn fill_increment(&self, index: i64, out: &mut [f64]) {
        self.base.fill_increment(index + self.offset_steps, out)
    }
}

/// Wiener shift. Shifts compose additively on the step offset.
pub trait Shift {
    fn shift_steps(&self, steps: i64) -> ShiftedPath;

    /// Shift by a time `s`, which must be a multiple of the grid step.
    fn shift(&self, s: f64) -> Result<ShiftedPath>;
}

impl Shift for BrownianPath {
    fn shift_steps(&self, steps: i64) -> ShiftedPath {
        ShiftedPath {
            base: *self,
            offset_steps: steps,
        }
    }

    fn shift(&self, s: f64) -> Result<ShiftedPath> {
        Ok(self.shift_steps(steps_of(s, self.grid.dt, "shift")?))
    }
}

impl Shift for ShiftedPath {
    fn shift_steps(&self, steps: i64) -> ShiftedPath {
        ShiftedPath {
            base: self.base,
            offset_steps: self.offset_steps + steps,
        }
    }

    fn shift(&self, s: f64) -> Result<ShiftedPath> {
        Ok(self.shift_steps(steps_of(s, self.base.grid.dt, "shift")?))
    }
}

/// Path that follows `past` for step indices below `split_index` and
/// `future` from there on. Used to probe which increments a quantity
/// depends on.
#[derive(Debug, Clone, Copy)]
pub struct SplicedPath<P, F> {
    pub past: P,
    pub future: F,
    pub split_index: i64,
}

impl<P: Noise, F: Noise> Noise for SplicedPath<P, F> {
    fn dims(&self) -> usize {
        self.past.dims()
    }

    fn grid(&self) -> TimeGrid {
        self.past.grid()
    }

    fn fill_increment(&self, index: i64, out: &mut [f64]) {
        if index < self.split_index {
            self.past.fill_increment(index, out)
        } else {
            self.future.fill_increment(index, out)
        }
    }
}

impl<T: Noise + ?Sized> Noise for &T {
    fn dims(&self) -> usize {
        (**self).dims()
    }

    fn grid(&self) -> TimeGrid {
        (**self).grid()
    }

    fn fill_increment(&self, index: i64, out: &mut [f64]) {
        (**self).fill_increment(index, out)
    }
}
