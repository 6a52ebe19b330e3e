use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GltrVector;
use crate::error::{Error, Result};
use crate::sample::Label;

const CHECKPOINT_FORMAT: &str = "mgtd-logreg";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            batch_size: 128,
            epochs: 500,
            learning_rate: 1e-3,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl LogRegConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::invalid("batch size, epochs and learning rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: [f64; 4],
    pub bias: f64,
    pub config: LogRegConfig,
    /// Mean training loss after each epoch.
    #[serde(default)]
    pub loss_history: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: LogRegModel,
}

impl LogRegModel {
    pub fn zeros(config: LogRegConfig) -> Self {
        LogRegModel {
            weights: [0.0; 4],
            bias: 0.0,
            config,
            loss_history: Vec::new(),
        }
    }

    pub fn logit(&self, x: &[f64; 4]) -> f64 {
        self.weights.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }

    /// Mean binary cross-entropy over `data`.
    pub fn loss(&self, data: &[GltrVector]) -> f64 {
        data.iter()
            .map(|v| bce_with_logit(self.logit(&v.features()), target(v.label)))
            .sum::<f64>()
            / data.len().max(1) as f64
    }

    /// Gradient of [`LogRegModel::loss`] with respect to `(weights, bias)`.
    pub fn gradient(&self, data: &[&GltrVector]) -> [f64; 5] {
        let mut g = [0.0; 5];
        for v in data {
            let x = v.features();
            let d = sigmoid(self.logit(&x)) - target(v.label);
            for j in 0..4 {
                g[j] += d * x[j];
            }
            g[4] += d;
        }
        let n = data.len().max(1) as f64;
        g.map(|x| x / n)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model: self.clone(),
        };
        fs::write(path, serde_json::to_string_pretty(&ck)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_slice(&fs::read(path)?)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::invalid(format!("unsupported checkpoint {} v{}", ck.format, ck.version)));
        }
        if !ck.model.weights.iter().chain([&ck.model.bias]).all(|x| x.is_finite()) {
            return Err(Error::invalid("checkpoint has non-finite parameters"));
        }
        Ok(ck.model)
    }
}

fn target(l: Label) -> f64 {
    f64::from(l.as_u8())
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn bce_with_logit(z: f64, y: f64) -> f64 {
    // log(1 + exp(z)) - y z, written to avoid overflow
    z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
}

/// Mini-batch AdamW on binary cross-entropy. Weight decay is decoupled and
/// applied to every parameter, bias included.
pub fn train_logreg(train: &[GltrVector], config: LogRegConfig) -> Result<LogRegModel> {
    config.validate()?;
    let has = |l: Label| train.iter().any(|v| v.label == l);
    if !has(Label::Human) || !has(Label::Machine) {
        return Err(Error::SingleClass);
    }
    let mut model = LogRegModel::zeros(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut m = [0.0f64; 5];
    let mut v = [0.0f64; 5];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&GltrVector> = chunk.iter().map(|&i| &train[i]).collect();
            let g = model.gradient(&batch);
            step += 1;
            let bc1 = 1.0 - config.beta1.powi(step);
            let bc2 = 1.0 - config.beta2.powi(step);
            for j in 0..5 {
                let param = if j < 4 { &mut model.weights[j] } else { &mut model.bias };
                *param *= 1.0 - config.learning_rate * config.weight_decay;
                m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
                v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                *param -= config.learning_rate * m_hat / (v_hat.sqrt() + config.eps);
            }
        }
        let loss = model.loss(train);
        model.loss_history.push(loss);
    }
    Ok(model)
}

/// Returns `(label, P(machine))`; the label is 1 iff the logit is non-negative.
pub fn predict_logreg(model: &LogRegModel, v: &GltrVector) -> (Label, f64) {
    let z = model.logit(&v.features());
    let label = if z >= 0.0 { Label::Machine } else { Label::Human };
    (label, sigmoid(z))
}
