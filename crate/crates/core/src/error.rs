use thiserror::Error;

/// Errors raised by the simulation and estimation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} = {value} is not an integer multiple of dt = {dt}")]
    GridMisalignment { what: String, value: f64, dt: f64 },

    #[error("numerical blowup at t = {t}: state {state:?}")]
    NumericalBlowup { t: f64, state: Vec<f64> },

    #[error("table evaluation at {x:?} lies outside the grid [{lo:?}, {hi:?}]")]
    Extrapolation { x: Vec<f64>, lo: Vec<f64>, hi: Vec<f64> },

    #[error("{excluded} of {total} pullback samples failed to converge")]
    TooManyExclusions { excluded: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
