//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain spec: {0}")]
    InvalidSpec(String),

    #[error("missing attribute: no value for ({concept}, {attribute}) in knowledge base")]
    MissingAttribute { concept: String, attribute: String },

    #[error("empty phrase")]
    EmptyPhrase,

    #[error("invalid k: {k} not in 1..={max}")]
    InvalidK { k: usize, max: usize },

    #[error("parse error at line {line}: {message}")]
    DatasetParse { line: usize, message: String },

    #[error("schema error at line {line}: {message}")]
    DatasetSchema { line: usize, message: String },

    #[error("invalid dims: {0}")]
    InvalidDims(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    VocabId { id: usize, vocab_size: usize },

    #[error("target matrix not binary: {0}")]
    Target(String),

    #[error("invalid capacity: {0} (must be >= 1)")]
    InvalidCapacity(usize),

    #[error("cannot sample from an empty buffer")]
    EmptyBuffer,

    #[error("no domains given")]
    NoDomains,

    #[error("unknown domain: {0}")]
    UnknownDomain(String),

    #[error("average precision undefined: no positive labels")]
    UndefinedAp,

    #[error("index error: {0}")]
    Index(String),

    #[error("step curve too short: length {len}, need at least 2")]
    CurveTooShort { len: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;
