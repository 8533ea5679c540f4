use thiserror::Error;

/// Errors raised across the workbench.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("vertex {vertex} out of range (graph has {n} vertices)")]
    InvalidVertex { vertex: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("negative weight {0}")]
    NegativeWeight(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("pair {pair} is unreachable in the current metric")]
    Unreachable { pair: usize },
    #[error("{what} exceeds the configured cap ({actual} > {cap})")]
    CapExceeded { what: &'static str, actual: usize, cap: usize },
    #[error("terminals are disconnected: {0}")]
    Disconnected(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
