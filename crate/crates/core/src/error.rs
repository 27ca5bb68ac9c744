use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("empty collection")]
    EmptyCollection,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    /// Index arithmetic left the fixed-width range.
    #[error("scale range exceeded: {0}")]
    Range(String),
    #[error("resource limit: {0}")]
    Resource(String),
    /// A verified property failed. Indicates a bug, not bad input.
    #[error("property violated: {0}")]
    Violation(String),
    #[error("calibration: {0}")]
    Calibration(String),
}

impl Error {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Self::Precondition(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidInput(msg.into())
    }

    /// Process exit code following the CLI contract: 2 for bad input,
    /// 3 for a violated property, 4 for a missing environment.
    #[must_use]
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Violation(_) => 3,
            Self::Calibration(_) => 4,
            _ => 2,
        }
    }
}
