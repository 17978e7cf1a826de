use thiserror::Error;

use crate::model::{FieldState, C64};

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("all control amplitudes vanish and gamma2 = 0: coefficients are undefined")]
    DegenerateCoefficients,

    #[error(
        "spectral quantity singular at k = {k}{}: {reason}",
        t.map(|t| format!(", t = {t}")).unwrap_or_default()
    )]
    DispersionSingularity {
        k: f64,
        t: Option<f64>,
        reason: &'static str,
    },

    #[error("slow branch ambiguous, finite branches: {branches:?}")]
    AmbiguousBranch { branches: Vec<C64> },

    #[error("eigen solver failed: {0}")]
    EigenFailure(&'static str),

    #[error("ratio undefined: {0}")]
    UndefinedRatio(&'static str),

    #[error("polariton component `{0}` has zero control amplitude")]
    UndefinedPolariton(&'static str),

    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),

    #[error("invalid control schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid integrator configuration: {0}")]
    InvalidIntegrator(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("trajectory does not belong to this scenario: {0}")]
    Mismatch(String),

    #[error("non-finite values at t = {t}; returning last finite state")]
    NumericalAbort { t: f64, last_good: Box<FieldState> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParams {
        field,
        reason: reason.into(),
    }
}
