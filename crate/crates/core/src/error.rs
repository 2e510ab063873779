use thiserror::Error;

/// Errors raised by the model, optimizer and serialization layers.
#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A closed form left its numeric domain (e.g. a vanishing denominator).
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("profile parse error: {0}")]
    Profile(String),

    #[error("csv error: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
