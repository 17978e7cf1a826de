use std::path::PathBuf;

use thiserror::Error;
use tricolor::model::FieldState;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("numerical abort at t = {t}; last finite state written")]
    Abort { t: f64, last_good: Box<FieldState> },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Library(#[from] tricolor::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Invalid(_) => 2,
            CliError::Abort { .. } => 3,
            CliError::Io { .. } => 1,
            CliError::Library(e) => match e {
                tricolor::Error::NumericalAbort { .. } => 3,
                tricolor::Error::Mismatch(_) | tricolor::Error::EigenFailure(_) => 1,
                _ => 2,
            },
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// Lifts a library error, turning numerical aborts into [`CliError::Abort`].
    pub fn from_run(e: tricolor::Error) -> Self {
        match e {
            tricolor::Error::NumericalAbort { t, last_good } => CliError::Abort { t, last_good },
            other => CliError::Library(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
