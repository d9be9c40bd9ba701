use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported spatial dimension {0}: only 1 and 2 are allowed (n <= 2)")]
    Dimension(usize),
    #[error("axis {axis} has {points} points, at least 3 are required")]
    TooFewPoints { axis: usize, points: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
    #[error("time {0} is not on the time grid")]
    OffGrid(f64),
    #[error("time window exhausted: {0}")]
    WindowExhausted(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("state has role {found:?}, expected {expected:?}")]
    RoleMismatch {
        expected: crate::model::Role,
        found: crate::model::Role,
    },
    #[error("blow-up at step {step} (t = {time}): {detail}")]
    BlowUp {
        step: usize,
        time: f64,
        detail: String,
    },
    #[error("step size {dt} violates the stability bound {bound}: {reason}")]
    StepTooLarge {
        dt: f64,
        bound: f64,
        reason: &'static str,
    },
    #[error("quadrature horizon {horizon} too short: tail weight {tail:e} exceeds 1e-6")]
    HorizonTooShort { horizon: f64, tail: f64 },
    #[error("empty point cloud")]
    EmptyCloud,
    #[error("{0}")]
    Invalid(String),
    #[error("bad file format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
