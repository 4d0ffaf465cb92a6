use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition (shape mismatch, non-finite
    /// entries, bad stride, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The data admit no model of the requested kind (e.g. numerical rank 0
    /// for classical DMD).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A snapshot or model file does not match the expected binary layout.
    #[error("malformed file: {0}")]
    MalformedFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
