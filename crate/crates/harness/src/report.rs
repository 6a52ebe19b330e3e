use std::path::Path;

use mgtd_classifier::EpochRecord;
use mgtd_core::metrics::Confusion;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spec::ExperimentSpec;

pub const REPORT_FORMAT: &str = "mgtd-report/1";

/// Validation share of the training data, written as valid:train.
pub const VALIDATION_RATIO: &str = "1:7";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub f_valid: f64,
    pub f_test: f64,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    pub confusion_valid: Confusion,
    pub confusion_test: Confusion,
    #[serde(default)]
    pub history: Vec<EpochRecord>,
}

/// Results of one experiment spec over all of its seeds. F1 values are
/// percentages with machine as the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format: String,
    pub backend_id: String,
    pub validation_ratio: String,
    /// Samples dropped for being shorter than `n_fixed`.
    pub rejected: usize,
    pub f_valid: f64,
    pub f_test: f64,
    pub wall_clock_secs: f64,
    pub spec: ExperimentSpec,
    pub runs: Vec<RunReport>,
}

impl EvalReport {
    pub fn new(spec: ExperimentSpec, backend_id: String, rejected: usize, runs: Vec<RunReport>, wall_clock_secs: f64) -> Self {
        let mean = |f: fn(&RunReport) -> f64| runs.iter().map(f).sum::<f64>() / runs.len().max(1) as f64;
        EvalReport {
            format: REPORT_FORMAT.into(),
            backend_id,
            validation_ratio: VALIDATION_RATIO.into(),
            rejected,
            f_valid: mean(|r| r.f_valid),
            f_test: mean(|r| r.f_test),
            wall_clock_secs,
            spec,
            runs,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let report: EvalReport = toml::from_str(text)?;
        if report.format != REPORT_FORMAT {
            return Err(Error::Spec(format!("report format {:?}", report.format)));
        }
        Ok(report)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()?).map_err(Error::io(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_toml(&std::fs::read_to_string(path).map_err(Error::io(path))?)
    }
}
