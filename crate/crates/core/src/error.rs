use thiserror::Error;

/// Errors raised by the bound library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An oracle was asked for a problem larger than it is willing to handle.
    #[error("oracle scale exceeded: n = {n} > {limit}")]
    ScaleExceeded { n: u64, limit: u64 },
    /// A numerical routine failed in a way that should be impossible.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
