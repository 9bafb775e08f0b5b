use thiserror::Error;

/// Errors surfaced by the library. Data-shaped problems carry enough context
/// for a one-line diagnostic (file, line number).
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty or whitespace-only text")]
    EmptyText,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("requested {split} size {size} is odd; label-balanced splits must be even")]
    OddSize { split: &'static str, size: usize },

    #[error("not enough label-{label} examples: need {needed}, have {available}")]
    InsufficientExamples {
        label: u8,
        needed: usize,
        available: usize,
    },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("token index {index} out of range for vocabulary of size {vocab}")]
    IndexOutOfRange { index: usize, vocab: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bad checkpoint file: {0}")]
    BadCheckpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;
