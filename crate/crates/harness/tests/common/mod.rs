#![allow(dead_code)]

use mgtd_classifier::{EncoderConfig, TrainConfig};
use mgtd_core::features::{FeatureColumn, FeatureSequence};
use mgtd_core::generation::{build_completion_dataset, clean_text, split_into_documents, DecodingConfig, GenerationRecipe};
use mgtd_core::scoring::{train_ngram, NgramModel, TokenUnit};
use mgtd_core::{Label, TextSample, BUNDLED_CORPUS};
use mgtd_harness::{BackendKind, BackendRef, ExperimentSpec};

pub const N_FIXED: usize = 30;

pub fn documents() -> Vec<TextSample> {
    let clean = clean_text(BUNDLED_CORPUS, &Default::default()).unwrap();
    split_into_documents(&clean, 120, "doc", Some("eighty-days"))
}

pub fn extractor(docs: &[TextSample]) -> NgramModel {
    train_ngram(docs, 2, 1.0, TokenUnit::Char).unwrap()
}

pub fn recipe(seed: u64) -> GenerationRecipe {
    GenerationRecipe {
        prompt_length: 10,
        decoding: DecodingConfig::nucleus(0.9, 40, seed),
        n_fixed: N_FIXED,
        machine_count: Some(40),
        human_count: Some(40),
        seed,
        ..GenerationRecipe::default()
    }
}

/// 40 machine and 40 human samples from an order-3 generator.
pub fn dataset(docs: &[TextSample], seed: u64) -> Vec<TextSample> {
    let generator = train_ngram(docs, 3, 1.0, TokenUnit::Char).unwrap();
    build_completion_dataset(docs, &generator, &recipe(seed)).unwrap()
}

pub fn tiny_encoder() -> EncoderConfig {
    EncoderConfig {
        layers: 1,
        hidden: 8,
        heads: 1,
        ff_width: 16,
        ..EncoderConfig::default()
    }
}

pub fn spec(data: &str, backend: &str) -> ExperimentSpec {
    let backend = BackendRef {
        kind: BackendKind::Ngram,
        path: backend.into(),
    };
    let mut spec = ExperimentSpec::in_domain("small", data, backend);
    spec.n_fixed = N_FIXED;
    spec.encoder = tiny_encoder();
    spec.train = TrainConfig {
        batch_size: 16,
        learning_rate: 1e-3,
        epochs: 3,
        ..TrainConfig::default()
    };
    spec
}

/// Constant-valued sequences, `machine` of them labeled machine first.
pub fn labeled(machine: usize, human: usize) -> Vec<FeatureSequence> {
    let cols = vec![
        FeatureColumn::Probability,
        FeatureColumn::LogRank,
        FeatureColumn::CumulativeProbability,
        FeatureColumn::Entropy,
    ];
    (0..machine + human)
        .map(|i| {
            let label = if i < machine { Label::Machine } else { Label::Human };
            FeatureSequence::new(format!("s{i:04}"), label, "b", cols.clone(), 4, vec![i as f32; 16]).unwrap()
        })
        .collect()
}
