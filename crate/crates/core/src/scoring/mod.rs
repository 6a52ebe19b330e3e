//! Next-token distributions and per-position statistics.
//!
//! A [`ScoringBackend`] turns a document into one [`DistributionStats`] per
//! token. Position `i` is scored under the distribution conditioned on
//! `BOS + tokens[..i]`, so the first token is scored too.

mod ngram;
mod stream;
mod vocab;

pub use ngram::{train_ngram, NgramModel};
pub use stream::{decode_score_stream, encode_score_stream, read_score_stream, write_score_stream, ScoreStream, StreamBackend, StreamSample};
pub use vocab::{tokenize, TokenSequence, TokenUnit, Vocabulary, BOS_TOKEN, UNK_TOKEN};

use crate::error::{Error, Result};
use crate::features::{cumulative_probability_of, entropy_of, probability_of, rank_of};

/// Dense probability vector over the whole vocabulary for one position.
#[derive(Debug, Clone, PartialEq)]
pub struct NextTokenDistribution {
    probs: Vec<f64>,
}

impl NextTokenDistribution {
    pub const SUM_TOLERANCE: f64 = 1e-6;

    /// Validates non-negativity and normalization.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("distribution over an empty vocabulary"));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid(format!("invalid probability {} at token {i}", probs[i])));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {sum}")));
        }
        Ok(NextTokenDistribution { probs })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        NextTokenDistribution { probs }
    }

    /// Rescales arbitrary non-negative weights to sum to one.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::invalid("weights must be non-negative with a positive finite sum"));
        }
        Ok(NextTokenDistribution {
            probs: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }
}

/// Statistics of the observed token at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionStats {
    /// 1-based.
    pub position: u32,
    pub token_id: u32,
    pub p: f64,
    pub r: u32,
    pub c: f64,
    /// Natural-log entropy of the whole distribution.
    pub e: f64,
}

impl DistributionStats {
    pub fn compute(position: u32, token_id: u32, dist: &NextTokenDistribution) -> Self {
        DistributionStats {
            position,
            token_id,
            p: probability_of(dist, token_id),
            r: rank_of(dist, token_id),
            c: cumulative_probability_of(dist, token_id),
            e: entropy_of(dist),
        }
    }
}

/// An autoregressive model exposing full next-token distributions.
pub trait LanguageModel: Send + Sync {
    fn vocab(&self) -> &Vocabulary;

    /// Distribution of the next token after `history`. An empty history means
    /// only BOS has been seen.
    fn next_distribution(&self, history: &[u32]) -> NextTokenDistribution;

    fn backend_id(&self) -> String;
}

/// Produces per-position statistics for documents.
pub trait ScoringBackend: Send + Sync {
    fn backend_id(&self) -> String;

    fn vocab_size(&self) -> usize;

    fn score(&self, tokens: &TokenSequence) -> Result<Vec<DistributionStats>>;

    /// Tokenizes (when the backend owns a vocabulary) and scores a document.
    fn score_document(&self, sample_id: &str, text: &str) -> Result<Vec<DistributionStats>>;
}

/// Scores every position of `tokens` under `model`.
pub fn score_sequence<M: LanguageModel + ?Sized>(model: &M, tokens: &TokenSequence) -> Result<Vec<DistributionStats>> {
    if tokens.is_empty() {
        return Err(Error::EmptyInput);
    }
    let v = model.vocab().size();
    let mut out = Vec::with_capacity(tokens.len());
    for (i, &id) in tokens.ids.iter().enumerate() {
        if id as usize >= v {
            return Err(Error::Backend {
                position: i + 1,
                message: format!("token id {id} outside vocabulary of {v}"),
            });
        }
        let dist = model.next_distribution(&tokens.ids[..i]);
        out.push(DistributionStats::compute(i as u32 + 1, id, &dist));
    }
    Ok(out)
}

impl<M: LanguageModel> ScoringBackend for M {
    fn backend_id(&self) -> String {
        LanguageModel::backend_id(self)
    }

    fn vocab_size(&self) -> usize {
        self.vocab().size()
    }

    fn score(&self, tokens: &TokenSequence) -> Result<Vec<DistributionStats>> {
        score_sequence(self, tokens)
    }

    fn score_document(&self, sample_id: &str, text: &str) -> Result<Vec<DistributionStats>> {
        let tokens = self.vocab().tokenize(text, sample_id)?;
        score_sequence(self, &tokens)
    }
}
