use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("degenerate gradient at {what} {index}: |grad f| = {norm:e}")]
    DegenerateGradient { what: &'static str, index: usize, norm: f64 },

    #[error("non-finite value in loss term `{term}` at index {index}")]
    NonFinite { term: &'static str, index: usize },

    #[error("training failed at iteration {iteration}: {reason}")]
    Training { iteration: usize, reason: String },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
