use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition of an operation was not met by its arguments.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An enumeration or exact search would exceed its configured budget.
    #[error("instance too large for {what}: estimated size {estimated} exceeds budget {budget}")]
    TooLarge { what: &'static str, estimated: f64, budget: f64 },

    /// A document could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
