use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The request is outside what an exhaustive method can handle.
    #[error("problem too large: {0}")]
    Scale(String),

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("malformed instance file: {0}")]
    Parse(#[from] serde_json::Error),
}

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Dimension(msg.into()))
}
