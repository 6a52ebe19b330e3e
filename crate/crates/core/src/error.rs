use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("corpus has no usable tokens")]
    EmptyCorpus,

    #[error("corpus too small: need {required} usable documents, found {found}")]
    CorpusTooSmall { required: usize, found: usize },

    #[error("insufficient length: {have} tokens, need {need}")]
    InsufficientLength { have: usize, need: usize },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("backend failure at position {position}: {message}")]
    Backend { position: usize, message: String },

    #[error("malformed file at offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("non-finite value in record {record}")]
    NonFinite { record: usize },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short stable identifier, used by the CLI for machine-readable errors.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyInput => "empty-input",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::EmptyCorpus => "empty-corpus",
            Error::CorpusTooSmall { .. } => "corpus-too-small",
            Error::InsufficientLength { .. } => "insufficient-length",
            Error::SingleClass => "single-class",
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::Backend { .. } => "backend",
            Error::Format { .. } => "malformed-file",
            Error::NonFinite { .. } => "non-finite",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
