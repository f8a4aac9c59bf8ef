use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator and its tooling.
#[derive(Debug, Error)]
pub enum QaoaError {
    /// A size limit (qubit count, dense matrix dimension) was exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// An argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Input data is unusable, e.g. a cost function returned a non-finite value.
    #[error("data error: {0}")]
    Data(String),
    /// A persisted file is malformed.
    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },
    /// A persisted object does not match the context that requested it.
    #[error("compatibility error: {0}")]
    Compatibility(String),
    /// The classical optimizer could not proceed.
    #[error("optimizer aborted: {0}")]
    Optimizer(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = QaoaError> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> QaoaError {
    QaoaError::Domain(msg.into())
}

pub(crate) fn format_err(path: impl Into<PathBuf>, msg: impl Into<String>) -> QaoaError {
    QaoaError::Format {
        path: path.into(),
        msg: msg.into(),
    }
}
