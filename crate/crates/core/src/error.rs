use thiserror::Error;

/// Errors raised by the engine and its building blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("value outside its domain: {0}")]
    Domain(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("problem exceeds desk scale: {0}")]
    Scale(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("estimation error: {0}")]
    Estimation(String),
    #[error("singular noise channel: {0}")]
    Singular(String),
    #[error("cannot draw a nontrivial error after {0} attempts")]
    NoNontrivialError(u64),
    #[error("channel has zero error rate")]
    TrivialChannel,
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Dimension(_) | Error::Scale(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
