#![allow(dead_code)]

use mgtd_classifier::EncoderConfig;
use mgtd_core::features::{FeatureColumn, FeatureSequence};
use mgtd_core::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const COLUMNS: [FeatureColumn; 4] = [
    FeatureColumn::Probability,
    FeatureColumn::LogRank,
    FeatureColumn::CumulativeProbability,
    FeatureColumn::Entropy,
];

pub fn sequence(id: &str, label: Label, n: usize, values: Vec<f32>) -> FeatureSequence {
    FeatureSequence::new(id, label, "test", COLUMNS.to_vec(), n, values).unwrap()
}

/// Machine rows sit at (p~1, log-rank~0, c~0); human rows are uniform noise.
pub fn separable(count: usize, n: usize, seed: u64) -> Vec<FeatureSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Machine } else { Label::Human };
            let mut v = Vec::with_capacity(n * 4);
            for _ in 0..n {
                if label == Label::Machine {
                    v.extend([
                        rng.random_range(0.95..1.0),
                        rng.random_range(0.0..0.05),
                        rng.random_range(0.0..0.05),
                        rng.random_range(0.0..0.3),
                    ]);
                } else {
                    v.extend([
                        rng.random_range(0.0..1.0),
                        rng.random_range(0.0..2.0),
                        rng.random_range(0.0..1.0),
                        rng.random_range(0.0..3.0),
                    ]);
                }
            }
            sequence(&format!("s{i}"), label, n, v)
        })
        .collect()
}

/// Small, dropout-free configuration that trains in seconds.
pub fn small_config() -> EncoderConfig {
    EncoderConfig {
        layers: 1,
        hidden: 16,
        dropout: 0.0,
        head_dropout: 0.0,
        heads: 2,
        ff_width: 32,
        bottleneck: 8,
        kernel_sizes: vec![3, 5, 9],
        inception_blocks: 3,
    }
}
