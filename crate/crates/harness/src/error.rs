use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid experiment spec: {0}")]
    Spec(String),

    #[error("dataset not found: {}", .0.display())]
    MissingDataset(PathBuf),

    #[error("class {class} has {have} sample(s), need at least {need}")]
    TooFewSamples { class: u8, have: usize, need: usize },

    #[error("feature layout mismatch: {0}")]
    FeatureMismatch(String),

    #[error("test sample {0} also appears in the training data")]
    Leakage(String),

    #[error("no sample reached the fixed length ({skipped} rejected)")]
    NothingExtracted { skipped: usize },

    #[error(transparent)]
    Core(#[from] mgtd_core::Error),

    #[error(transparent)]
    Classifier(#[from] mgtd_classifier::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("toml: {0}")]
    TomlRead(#[from] toml::de::Error),

    #[error("toml: {0}")]
    TomlWrite(#[from] toml::ser::Error),
}

impl Error {
    /// Stable identifier printed by the command-line tool.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Spec(_) => "invalid-spec",
            Error::MissingDataset(_) => "missing-dataset",
            Error::TooFewSamples { .. } => "too-few-samples",
            Error::FeatureMismatch(_) => "feature-mismatch",
            Error::Leakage(_) => "id-leakage",
            Error::NothingExtracted { .. } => "insufficient-length",
            Error::Core(e) => e.code(),
            Error::Classifier(e) => e.code(),
            Error::Io { .. } => "io",
            Error::TomlRead(_) | Error::TomlWrite(_) => "malformed-file",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}
