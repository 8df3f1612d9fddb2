use thiserror::Error;

/// Errors raised by the simulator, the environments and the training engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("unknown action {0}")]
    UnknownAction(usize),
    #[error("state error: {0}")]
    State(String),
    #[error("no pole memory entry labelled {0:?}")]
    Lookup(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
