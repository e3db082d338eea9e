use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the model, the numerical engines and the file formats.
#[derive(Debug, Error)]
pub enum AlleeError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("Allee parameter leaves (0, K) at t = {t}: a_t = {value}, K = {capacity}")]
    ScheduleViolation { t: f64, value: f64, capacity: f64 },

    #[error("time {t} is outside the tabulated range [{start}, {end}]")]
    OutsideKnots { t: f64, start: f64, end: f64 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not reach tolerance {tol:e} after {panels} panels (last change {change:e})")]
    QuadratureNotConverged { tol: f64, panels: usize, change: f64 },

    #[error("step {step} (t = {time}) left the admissible range with state {state}")]
    StepFailure { step: usize, time: f64, state: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl AlleeError {
    /// Whether the error stems from user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            AlleeError::InvalidParams(_)
                | AlleeError::InvalidSchedule(_)
                | AlleeError::ScheduleViolation { .. }
                | AlleeError::OutsideKnots { .. }
                | AlleeError::Domain(_)
                | AlleeError::InvalidInput(_)
                | AlleeError::Parse { .. }
                | AlleeError::Config { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, AlleeError>;
