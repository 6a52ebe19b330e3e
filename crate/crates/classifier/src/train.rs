use candle_nn::{AdamW, Optimizer, ParamsAdamW};
use mgtd_core::features::FeatureSequence;
use mgtd_core::{metrics, Label};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{EncoderConfig, ModelKind, TrainConfig};
use crate::error::{Error, Result};
use crate::model::{Detector, EpochRecord};
use crate::nn::Mode;

const SHUFFLE_STREAM: u64 = 1;
const DROPOUT_STREAM: u64 = 2;

fn check_set(set: &[FeatureSequence], name: &'static str) -> Result<(usize, Vec<mgtd_core::features::FeatureColumn>)> {
    let first = set.first().ok_or(Error::EmptySet(name))?;
    for fs in set {
        if fs.n_fixed() != first.n_fixed() || fs.columns() != first.columns() {
            return Err(Error::Shape(format!(
                "{name} sample {} does not match the layout of {}",
                fs.sample_id, first.sample_id
            )));
        }
    }
    Ok((first.n_fixed(), first.columns().to_vec()))
}

/// Trains a fresh detector and returns its final-epoch parameters along with
/// per-epoch training loss and validation F1.
pub fn train(
    kind: ModelKind,
    encoder: &EncoderConfig,
    train_set: &[FeatureSequence],
    val_set: &[FeatureSequence],
    config: &TrainConfig,
) -> Result<Detector> {
    config.validate()?;
    let (n_fixed, columns) = check_set(train_set, "training")?;
    let (vn, vcols) = check_set(val_set, "validation")?;
    if vn != n_fixed || vcols != columns {
        return Err(Error::Shape("validation and training feature layouts differ".into()));
    }
    let machines = train_set.iter().filter(|s| s.label == Label::Machine).count();
    if machines == 0 || machines == train_set.len() {
        return Err(Error::SingleClass);
    }

    let detector = Detector::new(kind, encoder.clone(), n_fixed, columns, config.seed)?;
    fit(detector, train_set, val_set, config)
}

/// Continues optimizing an existing detector.
pub fn fit(
    mut detector: Detector,
    train_set: &[FeatureSequence],
    val_set: &[FeatureSequence],
    config: &TrainConfig,
) -> Result<Detector> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptySet("training"));
    }
    if val_set.is_empty() {
        return Err(Error::EmptySet("validation"));
    }
    let mut opt = AdamW::new(
        detector.trainable_vars(),
        ParamsAdamW {
            lr: config.learning_rate,
            weight_decay: config.weight_decay,
            ..ParamsAdamW::default()
        },
    )?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(SHUFFLE_STREAM);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed);
    dropout_rng.set_stream(DROPOUT_STREAM);

    let val_labels: Vec<Label> = val_set.iter().map(|s| s.label).collect();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut best = f64::NEG_INFINITY;
    let mut since_best = 0;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let samples: Vec<&FeatureSequence> = batch.iter().map(|&i| &train_set[i]).collect();
            let labels: Vec<Label> = samples.iter().map(|s| s.label).collect();
            let x = detector.batch_tensor(&samples)?;
            let loss = detector.loss(&x, &labels, &mut Mode::Train(&mut dropout_rng))?;
            opt.backward_step(&loss)?;
            total += loss.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()? * batch.len() as f64;
        }
        let train_loss = total / train_set.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::Config(format!("training diverged at epoch {epoch}")));
        }
        let preds: Vec<Label> = detector.predict_batch(val_set)?.iter().map(|p| p.label).collect();
        let val_f1 = metrics::f1(&preds, &val_labels)?;
        detector.history.push(EpochRecord {
            epoch,
            train_loss,
            val_f1,
        });

        if let Some(patience) = config.early_stop_patience {
            if val_f1 > best {
                best = val_f1;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= patience {
                    break;
                }
            }
        }
    }
    Ok(detector)
}
