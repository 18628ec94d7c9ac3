use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("syntax error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("horizon insufficient: temporal window starting at t={time} lies beyond the trajectory end {horizon}")]
    HorizonInsufficient { time: f64, horizon: f64 },

    #[error("numerical blow-up: non-finite state at sample {index}")]
    NumericalBlowUp { index: usize },

    #[error("simulation failed: {message}")]
    Simulation {
        message: String,
        exit_code: Option<i32>,
        stderr: String,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("training diverged: {0}")]
    Training(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            actual,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn simulation(message: impl Into<String>) -> Self {
        Error::Simulation {
            message: message.into(),
            exit_code: None,
            stderr: String::new(),
        }
    }
}
