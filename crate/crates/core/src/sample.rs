//! Labeled documents and the JSONL dataset format.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class of a document. Serialized as `0` (human) / `1` (machine).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    Human,
    Machine,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Human => 0,
            Label::Machine => 1,
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l.as_u8()
    }
}

impl TryFrom<u8> for Label {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Label::Human),
            1 => Ok(Label::Machine),
            other => Err(Error::invalid(format!("label must be 0 or 1, got {other}"))),
        }
    }
}

/// Decoding parameters echoed into dataset provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingMeta {
    pub algorithm: String,
    #[serde(rename = "T")]
    pub temperature: Option<f64>,
    pub k: Option<usize>,
    pub top_p: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    #[serde(default)]
    pub generator_backend: Option<String>,
    #[serde(default)]
    pub decoding: Option<DecodingMeta>,
    #[serde(default)]
    pub prompt_source_id: Option<String>,
    #[serde(default)]
    pub corpus_tag: Option<String>,
}

/// One labeled document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextSample {
    pub id: String,
    pub text: String,
    pub label: Label,
    #[serde(default)]
    pub meta: SampleMeta,
}

impl TextSample {
    pub fn human(id: impl Into<String>, text: impl Into<String>) -> Self {
        TextSample {
            id: id.into(),
            text: text.into(),
            label: Label::Human,
            meta: SampleMeta::default(),
        }
    }
}

pub fn write_jsonl(path: impl AsRef<Path>, samples: &[TextSample]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for s in samples {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a JSONL dataset. Blank lines are skipped.
pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<TextSample>> {
    let reader = BufReader::new(File::open(path)?);
    let mut samples = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: TextSample = serde_json::from_str(&line).map_err(|e| {
            Error::invalid(format!("dataset line {}: {e}", lineno + 1))
        })?;
        samples.push(sample);
    }
    Ok(samples)
}
