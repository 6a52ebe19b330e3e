use std::path::{Path, PathBuf};

use mgtd_classifier::{EncoderConfig, ModelKind, TrainConfig};
use mgtd_core::features::{FeatureSubsetMask, RankMode, DEFAULT_N_FIXED};
use mgtd_core::gltr::LogRegConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEC_FORMAT: &str = "mgtd-experiment/1";

/// Environment variable naming the directory that relative dataset and
/// backend paths are resolved against.
pub const DATA_DIR_ENV: &str = "MGTD_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Configuration {
    /// One dataset, split 8:2 into train and test.
    InDomain,
    OutOfDomain,
    InTheWild,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    Stadee,
    Gltr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Ngram,
    Stream,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendRef {
    pub kind: BackendKind,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub format: String,
    pub name: String,
    pub configuration: Configuration,
    pub train_data: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_data: Option<PathBuf>,
    /// Train fraction of the in-domain split.
    #[serde(default = "default_split_ratio")]
    pub split_ratio: f64,
    /// Keeps only samples carrying this corpus tag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_tag: Option<String>,
    pub detector: DetectorKind,
    #[serde(default = "default_model_kind")]
    pub model_kind: ModelKind,
    #[serde(default = "default_mask")]
    pub feature_mask: FeatureSubsetMask,
    #[serde(default)]
    pub rank_mode: RankMode,
    #[serde(default = "default_n_fixed")]
    pub n_fixed: usize,
    pub seeds: Vec<u64>,
    pub backend: BackendRef,
    #[serde(default)]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub logreg: LogRegConfig,
}

fn default_split_ratio() -> f64 {
    0.8
}

fn default_model_kind() -> ModelKind {
    ModelKind::AttentionEncoder
}

fn default_mask() -> FeatureSubsetMask {
    FeatureSubsetMask::ALL
}

fn default_n_fixed() -> usize {
    DEFAULT_N_FIXED
}

impl ExperimentSpec {
    /// In-domain STADEE spec with default hyperparameters.
    pub fn in_domain(name: impl Into<String>, data: impl Into<PathBuf>, backend: BackendRef) -> Self {
        ExperimentSpec {
            format: SPEC_FORMAT.into(),
            name: name.into(),
            configuration: Configuration::InDomain,
            train_data: data.into(),
            test_data: None,
            split_ratio: default_split_ratio(),
            corpus_tag: None,
            detector: DetectorKind::Stadee,
            model_kind: default_model_kind(),
            feature_mask: default_mask(),
            rank_mode: RankMode::Log10,
            n_fixed: DEFAULT_N_FIXED,
            seeds: vec![0],
            backend,
            encoder: EncoderConfig::default(),
            train: TrainConfig::default(),
            logreg: LogRegConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Spec(m));
        if self.format != SPEC_FORMAT {
            return bad(format!("format {:?}, expected {SPEC_FORMAT:?}", self.format));
        }
        match (self.configuration, &self.test_data) {
            (Configuration::InDomain, Some(_)) => {
                return bad("in-domain experiments take a single dataset; remove test_data".into())
            }
            (Configuration::InDomain, None) => {
                if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
                    return bad(format!("split_ratio {} outside (0, 1)", self.split_ratio));
                }
            }
            (_, None) => return bad("out-of-domain and in-the-wild experiments need test_data".into()),
            (_, Some(test)) if *test == self.train_data => {
                return bad("train_data and test_data must differ".into())
            }
            _ => {}
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.n_fixed == 0 {
            return bad("n_fixed must be positive".into());
        }
        if self.feature_mask.is_empty() {
            return bad("feature mask selects no columns".into());
        }
        if self.detector == DetectorKind::Stadee {
            self.encoder.validate(self.model_kind)?;
            self.train.validate()?;
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_toml(&std::fs::read_to_string(path).map_err(Error::io(path))?)
    }
}

/// Resolves a possibly relative path: against `$MGTD_DATA_DIR` when set,
/// otherwise against `base`.
pub fn resolve_path(path: &Path, base: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) if !dir.is_empty() => Path::new(&dir).join(path),
        _ => base.join(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ExperimentSpec {
        ExperimentSpec::in_domain(
            "t",
            "data.jsonl",
            BackendRef {
                kind: BackendKind::Ngram,
                path: "m.json".into(),
            },
        )
    }

    #[test]
    fn toml_round_trip() {
        let mut s = spec();
        s.feature_mask = "c".parse().unwrap();
        s.rank_mode = RankMode::Raw;
        s.seeds = vec![1, 2, 3];
        let text = s.to_toml().unwrap();
        assert_eq!(ExperimentSpec::from_toml(&text).unwrap(), s);
    }

    #[test]
    fn minimal_spec_uses_defaults() {
        let text = r#"
            format = "mgtd-experiment/1"
            name = "m"
            configuration = "out-of-domain"
            train_data = "a.jsonl"
            test_data = "b.jsonl"
            detector = "gltr"
            seeds = [0]
            backend = { kind = "stream", path = "s.stsc" }
        "#;
        let s = ExperimentSpec::from_toml(text).unwrap();
        assert_eq!(s.n_fixed, 150);
        assert_eq!(s.feature_mask, FeatureSubsetMask::ALL);
        assert_eq!(s.encoder, EncoderConfig::default());
    }

    #[test]
    fn configuration_rules() {
        let mut s = spec();
        s.test_data = Some("x.jsonl".into());
        assert!(matches!(s.validate(), Err(Error::Spec(_))));
        s.configuration = Configuration::OutOfDomain;
        s.validate().unwrap();
        s.test_data = Some(s.train_data.clone());
        assert!(s.validate().is_err());
        s.test_data = None;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.seeds.clear();
        assert!(s.validate().is_err());
        let mut s = spec();
        s.format = "mgtd-experiment/0".into();
        assert!(s.validate().is_err());
    }
}
