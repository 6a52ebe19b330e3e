//! Sequence classifiers over per-token feature matrices.

mod attention;
mod checkpoint;
mod config;
mod error;
mod gradcheck;
mod inception;
mod model;
pub mod nn;
mod recurrent;
mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use config::{EncoderConfig, ModelKind, TrainConfig};
pub use error::{Error, Result};
pub use gradcheck::{compare_gradients, gradient_check, relative_error, tiny_config, TINY_N_FIXED};
pub use model::{Detector, EpochRecord, Prediction};
pub use train::{fit, train};
