//! Rank-bucket baseline: token ranks are histogrammed into four buckets and
//! the counts classified by logistic regression.

mod logreg;
mod report;

pub use logreg::{predict_logreg, train_logreg, LogRegConfig, LogRegModel};
pub use report::{emit_html_report, render_html_report};

use crate::error::{Error, Result};
use crate::features::FeatureSequence;
use crate::sample::Label;

/// Inclusive upper bounds of the first three buckets; the last is open.
pub const BUCKET_BOUNDS: [u32; 3] = [10, 100, 1000];

pub fn bucket_of(rank: u32) -> usize {
    BUCKET_BOUNDS.iter().position(|&b| rank <= b).unwrap_or(3)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GltrVector {
    pub counts: [u32; 4],
    pub label: Label,
    pub sample_id: String,
}

impl GltrVector {
    pub fn features(&self) -> [f64; 4] {
        self.counts.map(f64::from)
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn from_features(fs: &FeatureSequence) -> Result<Self> {
        let ranks = fs
            .ranks()
            .ok_or_else(|| Error::invalid(format!("sample {:?} has no rank column", fs.sample_id)))?;
        let mut v = bucketize(&ranks)?;
        v.label = fs.label;
        v.sample_id = fs.sample_id.clone();
        Ok(v)
    }
}

/// Counts ranks in `[1,10]`, `[11,100]`, `[101,1000]`, `[1001,inf)`.
pub fn bucketize(ranks: &[u32]) -> Result<GltrVector> {
    let mut counts = [0u32; 4];
    for &r in ranks {
        if r < 1 {
            return Err(Error::invalid("rank must be at least 1"));
        }
        counts[bucket_of(r)] += 1;
    }
    Ok(GltrVector {
        counts,
        label: Label::Human,
        sample_id: String::new(),
    })
}
