//! Building blocks for detecting machine-generated text from token-level
//! statistics: scoring backends, feature matrices, decoding algorithms,
//! synthetic dataset construction and the rank-bucket baseline.

mod binio;
pub mod error;
pub mod features;
pub mod generation;
pub mod gltr;
pub mod metrics;
pub mod sample;
pub mod scoring;
pub mod split;

pub use error::{Error, Result};
pub use sample::{Label, TextSample};

/// Public-domain English text (first chapters of a Project Gutenberg novel)
/// used for examples and the end-to-end experiment.
pub const BUNDLED_CORPUS: &str = include_str!("../data/eighty_days.txt");
