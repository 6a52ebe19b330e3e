use std::path::Path;

use mgtd_core::scoring::{NgramModel, ScoringBackend, StreamBackend};

use crate::error::{Error, Result};
use crate::spec::BackendKind;

/// A scoring backend loaded from disk.
pub enum Backend {
    Ngram(NgramModel),
    Stream(StreamBackend),
}

impl Backend {
    pub fn load(kind: BackendKind, path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::io(path)(std::io::ErrorKind::NotFound.into()));
        }
        Ok(match kind {
            BackendKind::Ngram => Backend::Ngram(NgramModel::load(path)?),
            BackendKind::Stream => Backend::Stream(StreamBackend::open(path)?),
        })
    }

    /// Picks the kind from the file contents: score streams start with their
    /// magic bytes, anything else is read as an n-gram model.
    pub fn open(path: &Path) -> Result<Self> {
        let head = std::fs::read(path).map_err(Error::io(path))?;
        let kind = if head.starts_with(b"STSC") {
            BackendKind::Stream
        } else {
            BackendKind::Ngram
        };
        Self::load(kind, path)
    }

    pub fn scorer(&self) -> &dyn ScoringBackend {
        match self {
            Backend::Ngram(m) => m,
            Backend::Stream(s) => s,
        }
    }

    pub fn ngram(&self) -> Option<&NgramModel> {
        match self {
            Backend::Ngram(m) => Some(m),
            Backend::Stream(_) => None,
        }
    }
}
