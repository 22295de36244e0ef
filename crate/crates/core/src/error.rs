use thiserror::Error;

/// Errors raised by the density, special-function and distance routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity exceeded: {what} = {requested} is above the ceiling {ceiling}")]
    Capacity {
        what: &'static str,
        requested: usize,
        ceiling: usize,
    },

    #[error("range error: {0}")]
    Range(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid file error: {0}")]
    GridFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
