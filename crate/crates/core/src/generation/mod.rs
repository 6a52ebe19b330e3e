//! Decoding algorithms and synthetic dataset construction.

mod dataset;
mod decoding;

pub use dataset::{
    build_completion_dataset, clean_text, sample_rng, split_into_documents, Cleaner, CleaningRules,
    GenerationRecipe,
};
pub use decoding::{
    generate, generate_with_rng, nucleus_truncate, sample_token, temperature_adjust, top_k_truncate, Algorithm,
    DecodingConfig,
};

use crate::error::Result;
use crate::sample::TextSample;
use crate::split::stratified_split;

/// Stratified shuffle split; `ratio` of each class goes to the first half.
pub fn split_dataset(dataset: Vec<TextSample>, ratio: f64, seed: u64) -> Result<(Vec<TextSample>, Vec<TextSample>)> {
    stratified_split(dataset, |s| s.label, ratio, seed)
}
