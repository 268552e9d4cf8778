//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by vector kernels, indexes, backends, and the dataset
/// pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("embedding must have at least one component")]
    EmptyEmbedding,

    #[error("embedding component {index} is not finite")]
    NonFinite { index: usize },

    #[error("zero-norm vector cannot be scored with cosine similarity")]
    ZeroNorm,

    #[error("duplicate document id {0}")]
    DuplicateId(i64),

    #[error("index is sealed and can no longer be modified")]
    IndexSealed,

    #[error("index must be sealed before it can be searched")]
    IndexUnsealed,

    #[error("k must be at least 1")]
    InvalidK,

    #[error("agreement needs at least 2 result lists, got {0}")]
    TooFewLists(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("remote endpoint {endpoint} unreachable: {message}")]
    Connection { endpoint: String, message: String },

    #[error("service at {endpoint} rejected the request (status {status}): {message}")]
    Protocol {
        endpoint: String,
        status: u16,
        message: String,
    },

    #[error("embedding provider {endpoint} failed after {attempts} attempt(s): {message}")]
    Provider {
        endpoint: String,
        attempts: u32,
        message: String,
    },

    #[error("failed to start stub server: {0}")]
    StubStartup(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
