use candle_core::{DType, Device, Tensor};
use mgtd_core::features::FeatureColumn;
use mgtd_core::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{EncoderConfig, ModelKind};
use crate::error::Result;
use crate::model::Detector;
use crate::nn::Mode;

pub const TINY_N_FIXED: usize = 6;
const STEP: f64 = 1e-5;
const BATCH: usize = 4;

/// Double-precision model small enough for exhaustive finite differences.
pub fn tiny_config() -> EncoderConfig {
    EncoderConfig {
        layers: 2,
        hidden: 8,
        dropout: 0.0,
        head_dropout: 0.0,
        heads: 2,
        ff_width: 16,
        bottleneck: 4,
        kernel_sizes: vec![2, 3, 5],
        inception_blocks: 3,
    }
}

fn columns() -> Vec<FeatureColumn> {
    vec![
        FeatureColumn::Probability,
        FeatureColumn::LogRank,
        FeatureColumn::CumulativeProbability,
        FeatureColumn::Entropy,
    ]
}

fn loss_value(detector: &Detector, x: &Tensor, labels: &[Label]) -> Result<f64> {
    // training mode so normalization uses batch statistics; dropout is zero
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    Ok(detector.loss(x, labels, &mut Mode::Train(&mut rng))?.to_scalar::<f64>()?)
}

/// Analytic gradients of `detector` on `(x, labels)` flattened in parameter
/// order, next to central finite differences.
pub fn compare_gradients(detector: &Detector, x: &Tensor, labels: &[Label]) -> Result<Vec<(f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let loss = detector.loss(x, labels, &mut Mode::Train(&mut rng))?;
    let grads = loss.backward()?;
    let mut pairs = Vec::new();
    for p in detector.params().entries().iter().filter(|p| p.trainable) {
        let shape = p.var.dims().to_vec();
        let original = p.var.as_tensor().flatten_all()?.to_vec1::<f64>()?;
        let analytic = match grads.get(p.var.as_tensor()) {
            Some(g) => g.flatten_all()?.to_vec1::<f64>()?,
            None => vec![0.0; original.len()],
        };
        let mut work = original.clone();
        for i in 0..original.len() {
            work[i] = original[i] + STEP;
            p.var.set(&Tensor::from_vec(work.clone(), shape.as_slice(), &Device::Cpu)?)?;
            let up = loss_value(detector, x, labels)?;
            work[i] = original[i] - STEP;
            p.var.set(&Tensor::from_vec(work.clone(), shape.as_slice(), &Device::Cpu)?)?;
            let down = loss_value(detector, x, labels)?;
            work[i] = original[i];
            pairs.push((analytic[i], (up - down) / (2.0 * STEP)));
        }
        p.var.set(&Tensor::from_vec(original, shape.as_slice(), &Device::Cpu)?)?;
    }
    Ok(pairs)
}

/// `|a - n| / max(|a|, |n|, 1e-6)`; the floor keeps vanishing gradients from
/// dominating through rounding noise.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Maximum relative error between analytic and finite-difference gradients
/// of a tiny seeded model.
pub fn gradient_check(kind: ModelKind) -> Result<f64> {
    let detector = Detector::with_dtype(kind, tiny_config(), TINY_N_FIXED, columns(), 7, DType::F64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let values: Vec<f64> = (0..BATCH * TINY_N_FIXED * 4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = Tensor::from_vec(values, (BATCH, TINY_N_FIXED, 4), &Device::Cpu)?;
    let labels = [Label::Human, Label::Machine, Label::Machine, Label::Human];
    let pairs = compare_gradients(&detector, &x, &labels)?;
    Ok(pairs
        .into_iter()
        .map(|(a, n)| relative_error(a, n))
        .fold(0.0, f64::max))
}
