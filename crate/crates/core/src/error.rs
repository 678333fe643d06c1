use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: duplicate record for slice {slice}, order {order}")]
    DuplicateRecord { line: u64, slice: u32, order: u32 },

    #[error("line {line}: order {order} goes back from slice {previous} to slice {slice}")]
    Ordering {
        line: u64,
        order: u32,
        slice: u32,
        previous: u32,
    },

    #[error("invalid synthetic spec: {0}")]
    Spec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("undefined: {0}")]
    Undefined(&'static str),

    #[error("input length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("groups of {0} factors are not supported; use one or two factors")]
    GroupTooLarge(usize),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn ensure_same_len(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::LengthMismatch(a, b))
    }
}
