use std::io;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("bad magic: expected \"SPRK\", found {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported format version {0} (expected 1)")]
    UnsupportedVersion(u32),

    #[error("unknown dtype tag {0}")]
    UnknownDtype(u8),

    #[error("truncated file while reading {0}")]
    Truncated(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate judgment for ({query_id}, {doc_id})")]
    DuplicateJudgment {
        line: usize,
        query_id: String,
        doc_id: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel length {kernel} does not match matrix length {matrix}")]
    ShapeMismatch { kernel: usize, matrix: usize },

    #[error("scale grid is empty")]
    EmptyGrid,

    #[error("invalid scale grid: {0}")]
    InvalidGrid(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("unknown document id {0:?}")]
    UnknownDocument(String),

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
