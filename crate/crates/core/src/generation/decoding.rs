use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::DecodingMeta;
use crate::scoring::{LanguageModel, NextTokenDistribution, TokenSequence};

/// Decoding algorithm with exactly the parameters it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum Algorithm {
    Pure,
    Temperature { temperature: f64 },
    TopK { k: usize },
    Nucleus { top_p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingConfig {
    #[serde(flatten)]
    pub algorithm: Algorithm,
    pub max_new_tokens: usize,
    #[serde(default)]
    pub seed: u64,
}

impl DecodingConfig {
    pub fn nucleus(top_p: f64, max_new_tokens: usize, seed: u64) -> Self {
        DecodingConfig {
            algorithm: Algorithm::Nucleus { top_p },
            max_new_tokens,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.algorithm {
            Algorithm::Pure => Ok(()),
            Algorithm::Temperature { temperature } if !(temperature > 0.0 && temperature.is_finite()) => {
                Err(Error::invalid("temperature must be positive"))
            }
            Algorithm::TopK { k } if k < 1 => Err(Error::invalid("top-k needs k >= 1")),
            Algorithm::Nucleus { top_p } if !(top_p > 0.0 && top_p <= 1.0) => {
                Err(Error::invalid("top_p must lie in (0, 1]"))
            }
            _ => Ok(()),
        }
    }

    /// Applies the configured adjustment to one distribution.
    pub fn adjust(&self, dist: &NextTokenDistribution) -> Result<NextTokenDistribution> {
        match self.algorithm {
            Algorithm::Pure => Ok(dist.clone()),
            Algorithm::Temperature { temperature } => temperature_adjust(dist, temperature),
            Algorithm::TopK { k } => top_k_truncate(dist, k),
            Algorithm::Nucleus { top_p } => nucleus_truncate(dist, top_p),
        }
    }

    pub fn meta(&self) -> DecodingMeta {
        let (name, temperature, k, top_p) = match self.algorithm {
            Algorithm::Pure => ("pure", None, None, None),
            Algorithm::Temperature { temperature } => ("temperature", Some(temperature), None, None),
            Algorithm::TopK { k } => ("top-k", None, Some(k), None),
            Algorithm::Nucleus { top_p } => ("nucleus", None, None, Some(top_p)),
        };
        DecodingMeta {
            algorithm: name.to_string(),
            temperature,
            k,
            top_p,
        }
    }
}

/// Token ids ordered by descending probability, ties by ascending id.
fn rank_order(probs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    order
}

fn keep_only(probs: &[f64], kept: &[usize]) -> NextTokenDistribution {
    let total: f64 = kept.iter().map(|&i| probs[i]).sum();
    let mut out = vec![0.0; probs.len()];
    for &i in kept {
        out[i] = probs[i] / total;
    }
    NextTokenDistribution::from_normalized(out)
}

/// `p'_v ∝ p_v^(1/T)`: dividing log-probabilities by `T`.
pub fn temperature_adjust(dist: &NextTokenDistribution, t: f64) -> Result<NextTokenDistribution> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid("temperature must be positive"));
    }
    if t == 1.0 {
        return Ok(dist.clone());
    }
    let max_log = dist
        .probs()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| p.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = dist
        .probs()
        .iter()
        .map(|&p| if p > 0.0 { ((p.ln() - max_log) / t).exp() } else { 0.0 })
        .collect();
    NextTokenDistribution::from_weights(weights)
}

/// Keeps the `k` most probable tokens and renormalizes.
pub fn top_k_truncate(dist: &NextTokenDistribution, k: usize) -> Result<NextTokenDistribution> {
    if k < 1 {
        return Err(Error::invalid("top-k needs k >= 1"));
    }
    if k >= dist.len() {
        return Ok(dist.clone());
    }
    let order = rank_order(dist.probs());
    Ok(keep_only(dist.probs(), &order[..k]))
}

/// Keeps the shortest rank-ordered prefix whose mass reaches `top_p`.
pub fn nucleus_truncate(dist: &NextTokenDistribution, top_p: f64) -> Result<NextTokenDistribution> {
    if !(top_p > 0.0 && top_p <= 1.0) {
        return Err(Error::invalid("top_p must lie in (0, 1]"));
    }
    if top_p >= 1.0 {
        return Ok(dist.clone());
    }
    let probs = dist.probs();
    let order = rank_order(probs);
    let mut mass = 0.0;
    let mut keep = order.len();
    for (n, &i) in order.iter().enumerate() {
        mass += probs[i];
        if mass >= top_p {
            keep = n + 1;
            break;
        }
    }
    Ok(keep_only(probs, &order[..keep]))
}

/// Inverse-CDF draw over token-id order.
pub fn sample_token<R: Rng + ?Sized>(dist: &NextTokenDistribution, rng: &mut R) -> u32 {
    let probs = dist.probs();
    let total: f64 = probs.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last_positive = i;
            if target < cum {
                return i as u32;
            }
        }
    }
    last_positive as u32
}

/// Removes BOS/UNK mass so they are never emitted, unless nothing else is left.
fn without_specials<M: LanguageModel + ?Sized>(model: &M, dist: NextTokenDistribution) -> NextTokenDistribution {
    let vocab = model.vocab();
    let mut probs = dist.into_probs();
    let special_mass = probs[vocab.bos() as usize] + probs[vocab.unk() as usize];
    if special_mass <= 0.0 || special_mass >= 1.0 {
        return NextTokenDistribution::from_normalized(probs);
    }
    probs[vocab.bos() as usize] = 0.0;
    probs[vocab.unk() as usize] = 0.0;
    let rest = 1.0 - special_mass;
    for p in &mut probs {
        *p /= rest;
    }
    NextTokenDistribution::from_normalized(probs)
}

pub fn generate_with_rng<M: LanguageModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    prompt: &TokenSequence,
    config: &DecodingConfig,
    rng: &mut R,
) -> Result<TokenSequence> {
    if prompt.is_empty() {
        return Err(Error::EmptyInput);
    }
    config.validate()?;
    let mut ids = prompt.ids.clone();
    ids.reserve(config.max_new_tokens);
    for _ in 0..config.max_new_tokens {
        let dist = without_specials(model, model.next_distribution(&ids));
        let adjusted = config.adjust(&dist)?;
        ids.push(sample_token(&adjusted, rng));
    }
    Ok(TokenSequence::new(ids, prompt.source_sample_id.clone()))
}

/// Autoregressive sampling for `max_new_tokens` steps, seeded from the config.
pub fn generate<M: LanguageModel + ?Sized>(
    model: &M,
    prompt: &TokenSequence,
    config: &DecodingConfig,
) -> Result<TokenSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    generate_with_rng(model, prompt, config, &mut rng)
}
