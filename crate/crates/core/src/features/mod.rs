//! Fixed-length feature matrices built from per-position statistics.
//!
//! Each row holds `(p, rank, c, e)` for one token. The rank column is
//! `log10(r)` by default; [`RankMode::Raw`] keeps the untransformed rank.

mod file;
mod stats;

pub use file::{decode_features, encode_features, read_features, write_features};
pub use stats::{cumulative_probability_of, entropy_of, log_rank, probability_of, rank_of};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::Label;
use crate::scoring::DistributionStats;

pub const DEFAULT_N_FIXED: usize = 150;

/// A column of the feature matrix. The discriminant is the on-disk column id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum FeatureColumn {
    Probability = 0,
    LogRank = 1,
    CumulativeProbability = 2,
    Entropy = 3,
    RawRank = 4,
}

impl FeatureColumn {
    pub fn from_id(id: u8) -> Option<Self> {
        Some(match id {
            0 => FeatureColumn::Probability,
            1 => FeatureColumn::LogRank,
            2 => FeatureColumn::CumulativeProbability,
            3 => FeatureColumn::Entropy,
            4 => FeatureColumn::RawRank,
            _ => return None,
        })
    }

    pub fn is_rank(self) -> bool {
        matches!(self, FeatureColumn::LogRank | FeatureColumn::RawRank)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    #[default]
    Log10,
    Raw,
}

impl RankMode {
    fn column(self) -> FeatureColumn {
        match self {
            RankMode::Log10 => FeatureColumn::LogRank,
            RankMode::Raw => FeatureColumn::RawRank,
        }
    }
}

/// Subset of the four statistics fed to a detector. Written as a comma list
/// of `p`, `r`, `c`, `e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeatureSubsetMask {
    pub p: bool,
    pub r: bool,
    pub c: bool,
    pub e: bool,
}

impl FeatureSubsetMask {
    pub const ALL: FeatureSubsetMask = FeatureSubsetMask {
        p: true,
        r: true,
        c: true,
        e: true,
    };

    pub fn new(p: bool, r: bool, c: bool, e: bool) -> Result<Self> {
        let m = FeatureSubsetMask { p, r, c, e };
        if m.len() == 0 {
            return Err(Error::invalid("feature mask selects no columns"));
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        [self.p, self.r, self.c, self.e].iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn selects(&self, col: FeatureColumn) -> bool {
        match col {
            FeatureColumn::Probability => self.p,
            FeatureColumn::LogRank | FeatureColumn::RawRank => self.r,
            FeatureColumn::CumulativeProbability => self.c,
            FeatureColumn::Entropy => self.e,
        }
    }
}

impl Default for FeatureSubsetMask {
    fn default() -> Self {
        Self::ALL
    }
}

impl fmt::Display for FeatureSubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [(self.p, "p"), (self.r, "r"), (self.c, "c"), (self.e, "e")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| *n)
            .collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for FeatureSubsetMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (mut p, mut r, mut c, mut e) = (false, false, false, false);
        for part in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match part {
                "p" => p = true,
                "r" => r = true,
                "c" => c = true,
                "e" => e = true,
                other => return Err(Error::invalid(format!("unknown feature {other:?}"))),
            }
        }
        FeatureSubsetMask::new(p, r, c, e)
    }
}

impl TryFrom<String> for FeatureSubsetMask {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FeatureSubsetMask> for String {
    fn from(m: FeatureSubsetMask) -> String {
        m.to_string()
    }
}

/// Row-major `n_fixed x width` matrix plus sample metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub sample_id: String,
    pub label: Label,
    pub backend_id: String,
    columns: Vec<FeatureColumn>,
    n_fixed: usize,
    values: Vec<f32>,
}

impl FeatureSequence {
    pub fn new(
        sample_id: impl Into<String>,
        label: Label,
        backend_id: impl Into<String>,
        columns: Vec<FeatureColumn>,
        n_fixed: usize,
        values: Vec<f32>,
    ) -> Result<Self> {
        if columns.is_empty() || n_fixed == 0 {
            return Err(Error::invalid("feature matrix must have at least one row and column"));
        }
        if values.len() != n_fixed * columns.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: n_fixed * columns.len(),
            });
        }
        Ok(FeatureSequence {
            sample_id: sample_id.into(),
            label,
            backend_id: backend_id.into(),
            columns,
            n_fixed,
            values,
        })
    }

    pub fn n_fixed(&self) -> usize {
        self.n_fixed
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn column(&self, col: FeatureColumn) -> Option<Vec<f32>> {
        let j = self.columns.iter().position(|c| *c == col)?;
        Some(self.values.iter().skip(j).step_by(self.width()).copied().collect())
    }

    /// Integer ranks recovered from whichever rank column is present.
    pub fn ranks(&self) -> Option<Vec<u32>> {
        if let Some(raw) = self.column(FeatureColumn::RawRank) {
            return Some(raw.iter().map(|r| r.round() as u32).collect());
        }
        let logs = self.column(FeatureColumn::LogRank)?;
        Some(logs.iter().map(|l| 10f64.powf(f64::from(*l)).round() as u32).collect())
    }
}

/// Why a sample was dropped by [`assemble`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rejected {
    pub have: usize,
    pub need: usize,
}

impl From<Rejected> for Error {
    fn from(r: Rejected) -> Self {
        Error::InsufficientLength {
            have: r.have,
            need: r.need,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssembleOptions {
    n_fixed: usize,
    pub rank_mode: RankMode,
}

impl AssembleOptions {
    pub fn new(n_fixed: usize, rank_mode: RankMode) -> Result<Self> {
        if n_fixed < 1 {
            return Err(Error::invalid("n_fixed must be at least 1"));
        }
        Ok(AssembleOptions { n_fixed, rank_mode })
    }

    pub fn n_fixed(&self) -> usize {
        self.n_fixed
    }
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions {
            n_fixed: DEFAULT_N_FIXED,
            rank_mode: RankMode::Log10,
        }
    }
}

/// Truncates to the first `n_fixed` positions; shorter samples are rejected.
pub fn assemble(
    stats: &[DistributionStats],
    options: &AssembleOptions,
    sample_id: &str,
    label: Label,
    backend_id: &str,
) -> std::result::Result<FeatureSequence, Rejected> {
    let n = options.n_fixed;
    if stats.len() < n {
        return Err(Rejected {
            have: stats.len(),
            need: n,
        });
    }
    let rank_col = options.rank_mode.column();
    let mut values = Vec::with_capacity(n * 4);
    for s in &stats[..n] {
        let rank = match rank_col {
            FeatureColumn::RawRank => f64::from(s.r),
            _ => f64::from(s.r).log10(),
        };
        values.extend_from_slice(&[s.p as f32, rank as f32, s.c as f32, s.e as f32]);
    }
    let columns = vec![
        FeatureColumn::Probability,
        rank_col,
        FeatureColumn::CumulativeProbability,
        FeatureColumn::Entropy,
    ];
    Ok(FeatureSequence {
        sample_id: sample_id.to_string(),
        label,
        backend_id: backend_id.to_string(),
        columns,
        n_fixed: n,
        values,
    })
}

/// Keeps the columns of `fs` selected by `mask`, in their existing order.
pub fn apply_mask(fs: &FeatureSequence, mask: &FeatureSubsetMask) -> Result<FeatureSequence> {
    if mask.is_empty() {
        return Err(Error::invalid("feature mask selects no columns"));
    }
    let keep: Vec<usize> = (0..fs.width()).filter(|&j| mask.selects(fs.columns[j])).collect();
    if keep.is_empty() {
        return Err(Error::invalid(format!(
            "mask {mask} selects none of the sample's columns"
        )));
    }
    if keep.len() == fs.width() {
        return Ok(fs.clone());
    }
    let mut values = Vec::with_capacity(fs.n_fixed * keep.len());
    for i in 0..fs.n_fixed {
        let row = fs.row(i);
        values.extend(keep.iter().map(|&j| row[j]));
    }
    Ok(FeatureSequence {
        sample_id: fs.sample_id.clone(),
        label: fs.label,
        backend_id: fs.backend_id.clone(),
        columns: keep.iter().map(|&j| fs.columns[j]).collect(),
        n_fixed: fs.n_fixed,
        values,
    })
}
