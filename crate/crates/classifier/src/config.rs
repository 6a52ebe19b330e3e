use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    AttentionEncoder,
    Recurrent,
    MultiScaleConvolution,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::AttentionEncoder,
        ModelKind::Recurrent,
        ModelKind::MultiScaleConvolution,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::AttentionEncoder => "attention-encoder",
            ModelKind::Recurrent => "recurrent",
            ModelKind::MultiScaleConvolution => "multi-scale-convolution",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind {s:?}")))
    }
}

/// Architecture hyperparameters shared by the three model kinds.
///
/// `hidden` is the encoder width, the per-direction state size of the
/// recurrent model, and four times the per-branch filter count of the
/// convolutional model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub layers: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub head_dropout: f64,
    pub heads: usize,
    pub ff_width: usize,
    pub bottleneck: usize,
    pub kernel_sizes: Vec<usize>,
    pub inception_blocks: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            layers: 3,
            hidden: 128,
            dropout: 0.3,
            head_dropout: 0.9,
            heads: 4,
            ff_width: 256,
            bottleneck: 32,
            kernel_sizes: vec![10, 20, 40],
            inception_blocks: 3,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self, kind: ModelKind) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.hidden == 0 {
            return bad("hidden must be positive");
        }
        for p in [self.dropout, self.head_dropout] {
            if !(0.0..1.0).contains(&p) {
                return bad("dropout rates must lie in [0, 1)");
            }
        }
        match kind {
            ModelKind::AttentionEncoder => {
                if self.layers == 0 || self.heads == 0 || self.ff_width == 0 {
                    return bad("layers, heads and ff_width must be positive");
                }
                if self.hidden % self.heads != 0 {
                    return bad("hidden must be divisible by heads");
                }
            }
            ModelKind::Recurrent => {}
            ModelKind::MultiScaleConvolution => {
                if self.hidden % 4 != 0 {
                    return bad("hidden must be divisible by 4 for the convolutional model");
                }
                if self.bottleneck == 0 || self.inception_blocks == 0 || self.kernel_sizes.len() != 3 {
                    return bad("convolutional model needs a bottleneck, blocks and three kernel sizes");
                }
                if self.kernel_sizes.contains(&0) {
                    return bad("kernel sizes must be positive");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub weight_decay: f64,
    pub seed: u64,
    /// Stop after this many epochs without validation-F1 improvement.
    pub early_stop_patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 512,
            learning_rate: 4e-5,
            epochs: 100,
            weight_decay: 0.01,
            seed: 0,
            early_stop_patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::Config("batch size, learning rate and epochs must be positive".into()));
        }
        Ok(())
    }
}
