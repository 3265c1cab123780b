use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("{what} supports at most {limit} qubits, got {requested}")]
    Capability {
        what: &'static str,
        limit: usize,
        requested: usize,
    },

    #[error("invalid Pauli string {0:?}")]
    InvalidPauli(String),

    #[error("term {index}: {message}")]
    Load { index: usize, message: String },

    #[error("operator is not Hermitian: {0}")]
    NonHermitian(String),

    #[error("diagnostic error: {0}")]
    Diagnostic(String),

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// True for errors caused by bad input (files, flags, config values)
    /// rather than by a failure during computation.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidPauli(_)
                | Error::Load { .. }
                | Error::File { .. }
                | Error::Json(_)
                | Error::Toml(_)
                | Error::QubitOutOfRange { .. }
                | Error::Capability { .. }
                | Error::DimensionMismatch { .. }
        )
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
