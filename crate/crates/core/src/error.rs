use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("input outside the domain of {op}: {reason}")]
    Domain { op: &'static str, reason: String },
    #[error("singular configuration in {op}: {reason}")]
    Singular { op: &'static str, reason: String },
    #[error("{op} did not converge after {iterations} iterations (last change {last_change:e})")]
    NonConvergence {
        op: &'static str,
        iterations: usize,
        last_change: f64,
    },
    #[error("{op}: {reason}")]
    Diagnostic { op: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Error {
    Error::Domain {
        op,
        reason: reason.into(),
    }
}

pub(crate) fn singular(op: &'static str, reason: impl Into<String>) -> Error {
    Error::Singular {
        op,
        reason: reason.into(),
    }
}
