use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite iterate at block {block}")]
    NonFinite { block: u64 },

    #[error("replication with seed {seed} aborted at block {block}")]
    ReplicationAborted { seed: u64, block: u64 },

    #[error("precondition violated at index {index}: {what}")]
    Precondition { index: usize, what: String },

    #[error("divergent configuration: {0}")]
    Divergent(String),

    #[error("checkpoint grids do not match: {0}")]
    GridMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by the computation itself.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::DimensionMismatch { .. }
                | Error::Divergent(_)
                | Error::Config(_)
                | Error::Parse(_)
                | Error::Io(_)
                | Error::GridMismatch(_)
        )
    }
}
