use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: empty or whitespace-only sentence")]
    EmptyLine { line: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("token {token} is outside the vocabulary")]
    OutOfVocabulary { token: String },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("word {0:?} does not occur in the corpus targets")]
    WordNotFound(String),

    #[error("enumeration exceeds {limit} sequences; use sampling-based estimates for this model")]
    EnumerationTooLarge { limit: usize },

    #[error("{sentences} sentences cannot fill {bins} bins")]
    TooFewSentences { sentences: usize, bins: usize },

    #[error("{path}: stored config hash {stored} differs from {current}")]
    ProvenanceMismatch {
        path: PathBuf,
        stored: String,
        current: String,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
