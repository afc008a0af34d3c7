use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the clustering pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// Views disagree on shape in a way that cannot be reconciled.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("parse error in {file} at row {row}, column {col}: {msg}")]
    Parse {
        file: PathBuf,
        row: usize,
        col: usize,
        msg: String,
    },

    #[error("not found: {0}")]
    NotFound(String),

    /// The model state is not ready for the requested operation.
    #[error("state error: {0}")]
    State(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 for bad input, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Structural(_) | Error::Parse { .. } | Error::NotFound(_) => 2,
            Error::State(_) | Error::Numeric(_) | Error::Io { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
