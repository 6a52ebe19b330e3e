use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("empty {0} set")]
    EmptySet(&'static str),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Tensor(#[from] candle_core::Error),

    #[error(transparent)]
    Core(#[from] mgtd_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape-mismatch",
            Error::SingleClass => "single-class",
            Error::EmptySet(_) => "empty-set",
            Error::Config(_) => "invalid-config",
            Error::Checkpoint(_) => "malformed-checkpoint",
            Error::Tensor(_) => "tensor",
            Error::Core(e) => e.code(),
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
