use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A parameter violates its documented range. The message names the
    /// violated constraint.
    #[error("range error: {0}")]
    Range(String),
    /// An exhaustive computation was requested beyond its size guard.
    #[error("size error: {0}")]
    Size(String),
    /// A computed result violates a property it is asserted to have.
    #[error("check failed: {0}")]
    Check(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn range<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Range(msg.into()))
}
