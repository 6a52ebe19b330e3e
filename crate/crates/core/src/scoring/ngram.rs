//! Additive-smoothed n-gram language model.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::vocab::{TokenUnit, Vocabulary};
use super::{LanguageModel, NextTokenDistribution};
use crate::error::{Error, Result};
use crate::sample::TextSample;

const MODEL_FORMAT: &str = "mgtd-ngram";
const MODEL_VERSION: u32 = 1;

/// Token counts observed after one context, sorted by token id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct ContextCounts {
    total: u64,
    counts: Vec<(u32, u64)>,
}

impl ContextCounts {
    fn from_map(map: HashMap<u32, u64>) -> Self {
        let mut counts: Vec<(u32, u64)> = map.into_iter().collect();
        counts.sort_unstable();
        ContextCounts {
            total: counts.iter().map(|(_, c)| c).sum(),
            counts,
        }
    }
}

/// P(w | ctx) = (count(ctx, w) + alpha) / (count(ctx) + alpha * |V|), where
/// ctx is the last `order - 1` tokens of the BOS-padded history. Contexts never
/// seen in training fall back to the smoothed unigram distribution.
#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    alpha: f64,
    vocab: Vocabulary,
    unigram: ContextCounts,
    contexts: HashMap<Vec<u32>, ContextCounts>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    order: usize,
    alpha: f64,
    vocab: Vocabulary,
    unigram: ContextCounts,
    contexts: Vec<(Vec<u32>, ContextCounts)>,
}

/// Builds the vocabulary from `corpus` and counts `order`-grams over it.
pub fn train_ngram(corpus: &[TextSample], order: usize, alpha: f64, unit: TokenUnit) -> Result<NgramModel> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let vocab = Vocabulary::from_texts(corpus.iter().map(|s| s.text.as_str()), unit)?;
    NgramModel::train(corpus.iter().map(|s| s.text.as_str()), vocab, order, alpha)
}

impl NgramModel {
    pub fn train<'a>(
        texts: impl IntoIterator<Item = &'a str>,
        vocab: Vocabulary,
        order: usize,
        alpha: f64,
    ) -> Result<Self> {
        if order < 1 {
            return Err(Error::invalid("n-gram order must be at least 1"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("smoothing alpha must be positive"));
        }
        let ctx_len = order - 1;
        let bos = vocab.bos();
        let mut unigram: HashMap<u32, u64> = HashMap::new();
        let mut contexts: HashMap<Vec<u32>, HashMap<u32, u64>> = HashMap::new();
        for text in texts {
            let Ok(seq) = vocab.tokenize(text, "") else {
                continue;
            };
            let mut padded = vec![bos; ctx_len];
            padded.extend_from_slice(&seq.ids);
            for i in ctx_len..padded.len() {
                let tok = padded[i];
                *unigram.entry(tok).or_default() += 1;
                if ctx_len > 0 {
                    let ctx = padded[i - ctx_len..i].to_vec();
                    *contexts.entry(ctx).or_default().entry(tok).or_default() += 1;
                }
            }
        }
        if unigram.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(NgramModel {
            order,
            alpha,
            vocab,
            unigram: ContextCounts::from_map(unigram),
            contexts: contexts
                .into_iter()
                .map(|(k, v)| (k, ContextCounts::from_map(v)))
                .collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn num_contexts(&self) -> usize {
        self.contexts.len()
    }

    /// Smoothed unigram distribution, used for order 1 and unseen contexts.
    pub fn unigram_distribution(&self) -> NextTokenDistribution {
        self.smoothed(&self.unigram)
    }

    fn smoothed(&self, counts: &ContextCounts) -> NextTokenDistribution {
        let v = self.vocab.size();
        let denom = counts.total as f64 + self.alpha * v as f64;
        let base = self.alpha / denom;
        let mut probs = vec![base; v];
        for &(tok, c) in &counts.counts {
            probs[tok as usize] = (c as f64 + self.alpha) / denom;
        }
        NextTokenDistribution::from_normalized(probs)
    }

    fn context_of(&self, history: &[u32]) -> Vec<u32> {
        let ctx_len = self.order - 1;
        let take = history.len().min(ctx_len);
        let mut ctx = vec![self.vocab.bos(); ctx_len - take];
        ctx.extend_from_slice(&history[history.len() - take..]);
        ctx
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut contexts: Vec<(Vec<u32>, ContextCounts)> =
            self.contexts.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        contexts.sort_by(|a, b| a.0.cmp(&b.0));
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            order: self.order,
            alpha: self.alpha,
            vocab: self.vocab.clone(),
            unigram: self.unigram.clone(),
            contexts,
        };
        fs::write(path, serde_json::to_vec(&file)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: ModelFile = serde_json::from_slice(&fs::read(path)?)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model file {} v{}",
                file.format, file.version
            )));
        }
        if file.order < 1 || !(file.alpha > 0.0) {
            return Err(Error::invalid("model file has invalid order or alpha"));
        }
        let v = file.vocab.size() as u32;
        let ctx_len = file.order - 1;
        let bad_counts = |c: &ContextCounts| c.counts.iter().any(|(t, _)| *t >= v);
        if bad_counts(&file.unigram)
            || file
                .contexts
                .iter()
                .any(|(ctx, c)| ctx.len() != ctx_len || ctx.iter().any(|t| *t >= v) || bad_counts(c))
        {
            return Err(Error::invalid("model file references ids outside its vocabulary"));
        }
        Ok(NgramModel {
            order: file.order,
            alpha: file.alpha,
            vocab: file.vocab,
            unigram: file.unigram,
            contexts: file.contexts.into_iter().collect(),
        })
    }
}

impl LanguageModel for NgramModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_distribution(&self, history: &[u32]) -> NextTokenDistribution {
        if self.order == 1 {
            return self.unigram_distribution();
        }
        match self.contexts.get(&self.context_of(history)) {
            Some(counts) => self.smoothed(counts),
            None => self.unigram_distribution(),
        }
    }

    fn backend_id(&self) -> String {
        format!(
            "ngram(order={},alpha={},unit={},vocab={},entropy=ln)",
            self.order,
            self.alpha,
            self.vocab.unit().as_str(),
            self.vocab.size()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{score_sequence, ScoringBackend, TokenSequence};

    fn corpus(texts: &[&str]) -> Vec<TextSample> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| TextSample::human(format!("s{i}"), *t))
            .collect()
    }

    #[test]
    fn bigram_hand_count() {
        // vocab {a, b, BOS, UNK}: count(a -> b) = 1, context total 1
        let m = train_ngram(&corpus(&["ab"]), 2, 1.0, TokenUnit::Char).unwrap();
        assert_eq!(m.vocab().size(), 4);
        let a = m.vocab().id("a");
        let b = m.vocab().id("b");
        let d = m.next_distribution(&[a]);
        assert!((d.probs()[b as usize] - 0.4).abs() < 1e-15);
        assert!((d.probs()[a as usize] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn order_one_is_context_free() {
        let m = train_ngram(&corpus(&["abcab", "cc"]), 1, 0.5, TokenUnit::Char).unwrap();
        let d0 = m.next_distribution(&[]);
        assert_eq!(d0, m.next_distribution(&[0, 1, 2]));
        assert_eq!(d0, m.unigram_distribution());
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(train_ngram(&[], 2, 1.0, TokenUnit::Char), Err(Error::EmptyCorpus)));
        assert!(train_ngram(&corpus(&["   "]), 2, 1.0, TokenUnit::Char).is_err());
        assert!(train_ngram(&corpus(&["ab"]), 0, 1.0, TokenUnit::Char).is_err());
        assert!(train_ngram(&corpus(&["ab"]), 2, 0.0, TokenUnit::Char).is_err());
    }

    #[test]
    fn unseen_context_uses_unigram_table() {
        let texts = ["abcab", "bca"];
        let m = train_ngram(&corpus(&texts), 3, 1.0, TokenUnit::Char).unwrap();
        let v = m.vocab();
        // independent unigram table
        let mut counts = vec![0f64; v.size()];
        let mut total = 0.0;
        for t in texts {
            for ch in t.chars() {
                counts[v.id(&ch.to_string()) as usize] += 1.0;
                total += 1.0;
            }
        }
        let expected: Vec<f64> = counts
            .iter()
            .map(|c| (c + 1.0) / (total + v.size() as f64))
            .collect();
        // (c, c) never occurs
        let c = v.id("c");
        let d = m.next_distribution(&[c, c]);
        for (got, want) in d.probs().iter().zip(&expected) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn distributions_sum_to_one() {
        let m = train_ngram(&corpus(&["the quick brown fox", "jumps over"]), 3, 0.1, TokenUnit::Char).unwrap();
        for hist in [&[][..], &[0], &[1, 2], &[5, 5, 5]] {
            let s: f64 = m.next_distribution(hist).probs().iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn shuffled_corpus_gives_same_model() {
        let a = train_ngram(&corpus(&["abc", "cab", "bba"]), 2, 1.0, TokenUnit::Char).unwrap();
        let b = train_ngram(&corpus(&["bba", "abc", "cab"]), 2, 1.0, TokenUnit::Char).unwrap();
        for h in 0..a.vocab().size() as u32 {
            assert_eq!(a.next_distribution(&[h]), b.next_distribution(&[h]));
        }
    }

    #[test]
    fn first_position_is_scored() {
        let m = train_ngram(&corpus(&["ab", "ab", "ba"]), 2, 1.0, TokenUnit::Char).unwrap();
        let seq = m.vocab().tokenize("abab", "x").unwrap();
        let stats = score_sequence(&m, &seq).unwrap();
        assert_eq!(stats.len(), 4);
        assert_eq!(stats[0].position, 1);
        // after BOS: a twice, b once
        assert_eq!(stats[0].r, 1);
        assert_eq!(stats[0].c, 0.0);
        assert!(matches!(
            score_sequence(&m, &TokenSequence::new(vec![], "e")),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let m = train_ngram(&corpus(&["hello world", "help"]), 3, 0.5, TokenUnit::Char).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        m.save(&path).unwrap();
        let back = NgramModel::load(&path).unwrap();
        assert_eq!(ScoringBackend::backend_id(&back), ScoringBackend::backend_id(&m));
        let seq = m.vocab().tokenize("hello help", "x").unwrap();
        assert_eq!(score_sequence(&m, &seq).unwrap(), score_sequence(&back, &seq).unwrap());
    }
}
