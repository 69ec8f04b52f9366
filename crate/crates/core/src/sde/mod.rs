//! System definitions and Euler–Maruyama flows.

mod field;
mod flow;
mod system;

pub use field::{Arity, FieldFn, VectorField};
pub use flow::{em_step, lifted_flow, simulate_fast, simulate_slow_fast, Stepper, BLOWUP_THRESHOLD};
pub use system::{LiftedState, SlowFastSystem, Trajectory};
