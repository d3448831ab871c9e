use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = PrismError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PrismError {
    #[error("format error: {0}")]
    Format(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("data error: {0}")]
    Data(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl PrismError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PrismError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        PrismError::Contract(msg.into())
    }

    /// Whether the error originates in input data (as opposed to a violated
    /// caller contract). The CLI maps the two classes onto distinct exit codes.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            PrismError::Format(_)
                | PrismError::Truncated { .. }
                | PrismError::Data(_)
                | PrismError::Manifest(_)
                | PrismError::DegenerateInput(_)
                | PrismError::Io { .. }
                | PrismError::Json(_)
        )
    }
}
