use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library. Solver non-convergence is reported via
/// outcome flags, not through this type; an `Error` means the request itself
/// could not be carried out.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{qubits} qubits exceeds the {max}-qubit state-vector ceiling")]
    TooManyQubits { qubits: usize, max: usize },

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("{0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
