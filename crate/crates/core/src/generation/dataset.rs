//! Text-completion dataset construction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::decoding::{generate_with_rng, DecodingConfig};
use crate::error::{Error, Result};
use crate::features::DEFAULT_N_FIXED;
use crate::sample::{Label, SampleMeta, TextSample};
use crate::scoring::{LanguageModel, TokenSequence};

/// Ordered text normalization rules. Literal punctuation substitutions run
/// first, then the regex replacements, then the result is trimmed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleaningRules {
    pub punctuation: Vec<(String, String)>,
    pub patterns: Vec<(String, String)>,
}

impl Default for CleaningRules {
    fn default() -> Self {
        CleaningRules {
            punctuation: Vec::new(),
            patterns: vec![
                (r"(?:\r\n|\r|\n|\\n)+".into(), " ".into()),
                (r"\s+".into(), " ".into()),
            ],
        }
    }
}

/// Compiled form of [`CleaningRules`].
#[derive(Debug, Clone)]
pub struct Cleaner {
    punctuation: Vec<(String, String)>,
    patterns: Vec<(Regex, String)>,
}

impl Cleaner {
    pub fn new(rules: &CleaningRules) -> Result<Self> {
        let patterns = rules
            .patterns
            .iter()
            .map(|(p, r)| {
                Regex::new(p)
                    .map(|re| (re, r.clone()))
                    .map_err(|e| Error::invalid(format!("bad cleaning pattern {p:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if rules.punctuation.iter().any(|(from, _)| from.is_empty()) {
            return Err(Error::invalid("empty punctuation pattern"));
        }
        Ok(Cleaner {
            punctuation: rules.punctuation.clone(),
            patterns,
        })
    }

    pub fn clean(&self, text: &str) -> String {
        let mut s = text.to_string();
        for (from, to) in &self.punctuation {
            s = s.replace(from.as_str(), to);
        }
        for (re, rep) in &self.patterns {
            s = re.replace_all(&s, rep.as_str()).into_owned();
        }
        s.trim().to_string()
    }
}

pub fn clean_text(text: &str, rules: &CleaningRules) -> Result<String> {
    Ok(Cleaner::new(rules)?.clean(text))
}

/// Splits a long text into documents of at least `min_chars` characters,
/// breaking only at whitespace. A short remainder is dropped.
pub fn split_into_documents(text: &str, min_chars: usize, id_prefix: &str, corpus_tag: Option<&str>) -> Vec<TextSample> {
    let mut docs = Vec::new();
    let mut current = String::new();
    for word in text.split_whitespace() {
        if !current.is_empty() {
            current.push(' ');
        }
        current.push_str(word);
        if current.chars().count() >= min_chars {
            let mut s = TextSample::human(format!("{id_prefix}{:05}", docs.len()), std::mem::take(&mut current));
            s.meta.corpus_tag = corpus_tag.map(str::to_string);
            docs.push(s);
        }
    }
    docs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationRecipe {
    pub prompt_length: usize,
    pub decoding: DecodingConfig,
    /// Minimum scored length every sample must reach.
    pub n_fixed: usize,
    pub cleaning: CleaningRules,
    /// Fraction of usable documents used as prompts when counts are unset.
    pub machine_fraction: f64,
    pub machine_count: Option<usize>,
    pub human_count: Option<usize>,
    /// Seeds the pool shuffle and the per-sample generators.
    pub seed: u64,
    pub corpus_tag: Option<String>,
}

impl Default for GenerationRecipe {
    fn default() -> Self {
        GenerationRecipe {
            prompt_length: 20,
            decoding: DecodingConfig::nucleus(0.9, 200, 0),
            n_fixed: DEFAULT_N_FIXED,
            cleaning: CleaningRules::default(),
            machine_fraction: 0.5,
            machine_count: None,
            human_count: None,
            seed: 0,
            corpus_tag: None,
        }
    }
}

impl GenerationRecipe {
    pub fn validate(&self) -> Result<()> {
        if self.prompt_length < 1 {
            return Err(Error::invalid("prompt_length must be at least 1"));
        }
        if self.prompt_length + self.decoding.max_new_tokens < self.n_fixed {
            return Err(Error::invalid(format!(
                "prompt ({}) plus continuation ({}) is shorter than n_fixed ({})",
                self.prompt_length, self.decoding.max_new_tokens, self.n_fixed
            )));
        }
        if !(0.0..=1.0).contains(&self.machine_fraction) {
            return Err(Error::invalid("machine_fraction must lie in [0, 1]"));
        }
        self.decoding.validate()
    }

    pub fn min_tokens(&self) -> usize {
        self.prompt_length + self.n_fixed
    }
}

/// Per-sample generator: the global seed selects the key, the sample index
/// the stream, so samples can be generated independently.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Splits the usable part of `corpus` into disjoint prompt and human pools,
/// completes every prompt with `model`, and returns machine samples followed
/// by human samples.
pub fn build_completion_dataset<M: LanguageModel + ?Sized>(
    corpus: &[TextSample],
    model: &M,
    recipe: &GenerationRecipe,
) -> Result<Vec<TextSample>> {
    recipe.validate()?;
    let cleaner = Cleaner::new(&recipe.cleaning)?;
    let vocab = model.vocab();

    let mut usable: Vec<(TextSample, TokenSequence)> = Vec::new();
    for s in corpus {
        let text = cleaner.clean(&s.text);
        let Ok(tokens) = vocab.tokenize(&text, &s.id) else {
            continue;
        };
        if tokens.len() >= recipe.min_tokens() {
            let mut s = s.clone();
            s.text = text;
            usable.push((s, tokens));
        }
    }

    let found = usable.len();
    let machine_count = recipe
        .machine_count
        .unwrap_or((found as f64 * recipe.machine_fraction).floor() as usize);
    let human_count = recipe.human_count.unwrap_or(found.saturating_sub(machine_count));
    let required = machine_count + human_count;
    if machine_count == 0 || human_count == 0 || required > found {
        return Err(Error::CorpusTooSmall {
            required: required.max(2),
            found,
        });
    }

    let mut order: Vec<usize> = (0..found).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(recipe.seed));
    let (prompt_pool, rest) = order.split_at(machine_count);
    let human_pool = &rest[..human_count];

    let backend = model.backend_id();
    let decoding_meta = recipe.decoding.meta();
    let mut out = Vec::with_capacity(required);
    for (i, &idx) in prompt_pool.iter().enumerate() {
        let (src, tokens) = &usable[idx];
        let prompt = TokenSequence::new(tokens.ids[..recipe.prompt_length].to_vec(), src.id.clone());
        let mut rng = sample_rng(recipe.seed, i as u64);
        let generated = generate_with_rng(model, &prompt, &recipe.decoding, &mut rng)?;
        out.push(TextSample {
            id: format!("{}#gen", src.id),
            text: vocab.detokenize(&generated.ids),
            label: Label::Machine,
            meta: SampleMeta {
                generator_backend: Some(backend.clone()),
                decoding: Some(decoding_meta.clone()),
                prompt_source_id: Some(src.id.clone()),
                corpus_tag: recipe.corpus_tag.clone().or_else(|| src.meta.corpus_tag.clone()),
            },
        });
    }
    for &idx in human_pool {
        let (src, _) = &usable[idx];
        let mut s = src.clone();
        s.label = Label::Human;
        s.meta.corpus_tag = recipe.corpus_tag.clone().or_else(|| s.meta.corpus_tag.clone());
        out.push(s);
    }
    Ok(out)
}
