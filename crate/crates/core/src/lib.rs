//! Simulation and verification toolkit for slow-fast SDEs whose fast
//! dynamics are periodically forced.
//!
//! * [`noise`]: counter-based two-sided Brownian paths and the Wiener shift.
//! * [`sde`]: systems, Euler–Maruyama flows, the lifted flow on the cylinder.
//! * [`pullback`]: random periodic solutions as pullback limits.
//! * [`measures`]: empirical periodic measures, the bounded-Lipschitz metric,
//!   Krylov–Bogolyubov curves, Poincaré-section and Lipschitz probes.
//! * [`diagnostics`]: coupling contraction rates, dissipativity constants,
//!   Lie brackets and Hörmander rank, semigroup continuity.
//! * [`averaging`]: averaged drift by two routes, the averaged ODE, the
//!   Hasminskii partition and the averaging-error study.
//! * [`oracles`]: closed forms for the forced OU process and the toy system.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod averaging;
pub mod catalog;
pub mod diagnostics;
pub mod error;
pub mod measures;
pub mod noise;
pub mod oracles;
pub mod par;
pub mod pullback;
pub mod quad;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
