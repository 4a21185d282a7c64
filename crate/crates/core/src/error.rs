use thiserror::Error;

/// Errors raised by the solver and the analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fractional order s = {0} is outside (0, 1)")]
    InvalidOrder(f64),

    #[error("time step {dt} exceeds the monotonicity bound {max}")]
    CflViolation { dt: f64, max: f64 },

    #[error(
        "L-infinity stability violated at node {node} (t = {time}): \
         h = {value} outside [{lower}, {upper}]"
    )]
    StabilityViolation {
        node: usize,
        time: f64,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("profile never crosses level {level} inside the window")]
    NoCrossing { level: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{0}")]
    Domain(String),

    #[error("config {path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidParameter { .. } | Error::InvalidOrder(_) => 2,
            Error::StabilityViolation { .. } | Error::CflViolation { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
