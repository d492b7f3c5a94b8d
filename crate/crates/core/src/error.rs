use std::io;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("parameter-set mismatch: {0}")]
    ParamMismatch(String),

    #[error("finite-difference probe failed: non-finite loss at {name}[{index}]")]
    ProbeFailure { name: String, index: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("span error: mention [{start}, {end}) invalid for {len} tokens")]
    Span {
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("unsupported encoder: {0}")]
    UnsupportedEncoder(String),

    #[error("non-finite loss at pass {pass}, batch {batch}; parameter norms: {norms}")]
    NonFiniteLoss {
        pass: usize,
        batch: usize,
        norms: String,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
