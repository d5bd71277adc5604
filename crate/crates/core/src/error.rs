use thiserror::Error;

use crate::config::ConfigError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported spin dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("closed-form phase requires an untilted, in-plane configuration")]
    TiltedTrajectory,

    #[error("integration step too coarse: step*|G| = {step_phase:.3} rad at t = {time:e} s (limit 0.5)")]
    StepTooCoarse { step_phase: f64, time: f64 },

    #[error("fringe slope vanishes at the bias point; phase is not locally invertible")]
    ZeroSlope,

    #[error("empty field grid")]
    EmptyGrid,

    #[error("field grid must be non-negative and strictly increasing (index {0})")]
    NonMonotoneGrid(usize),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit status used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io(_) => 1,
            _ => 3,
        }
    }
}
