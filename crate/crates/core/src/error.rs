use thiserror::Error;

/// Errors raised by the probing toolkit.
///
/// The variants mirror the failure classes callers can act on: a bad input
/// value, a request that exceeds what an exact oracle can enumerate, a broken
/// caller contract, or an invalid configuration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbingError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("[{code}] {location}: {message}")]
    Parse {
        code: &'static str,
        location: String,
        message: String,
    },
}

impl ProbingError {
    pub fn domain(msg: impl Into<String>) -> Self {
        ProbingError::Domain(msg.into())
    }

    pub fn capability(msg: impl Into<String>) -> Self {
        ProbingError::Capability(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        ProbingError::Contract(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        ProbingError::Config(msg.into())
    }

    /// Stable code for parse errors, `None` for the other variants.
    pub fn code(&self) -> Option<&'static str> {
        match self {
            ProbingError::Parse { code, .. } => Some(code),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ProbingError>;
