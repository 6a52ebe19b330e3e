use std::collections::HashSet;
use std::path::Path;
use std::time::Instant;

use mgtd_classifier::{Detector, TrainConfig};
use mgtd_core::features::{apply_mask, assemble, AssembleOptions, FeatureSequence};
use mgtd_core::gltr::{predict_logreg, train_logreg, GltrVector, LogRegModel};
use mgtd_core::metrics::Confusion;
use mgtd_core::sample::read_jsonl;
use mgtd_core::scoring::ScoringBackend;
use mgtd_core::split::stratified_split;
use mgtd_core::{Label, TextSample};
use rayon::prelude::*;

use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::report::{EvalReport, RunReport};
use crate::spec::{resolve_path, DetectorKind, ExperimentSpec};

/// Minimum samples per class for a validation split.
pub const MIN_PER_CLASS: usize = 8;

#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub features: Vec<FeatureSequence>,
    /// Ids of samples shorter than `n_fixed`.
    pub rejected: Vec<String>,
}

/// Scores and assembles every sample in parallel; output order follows input.
pub fn extract_features(
    samples: &[TextSample],
    backend: &dyn ScoringBackend,
    options: &AssembleOptions,
) -> Result<Extraction> {
    let backend_id = backend.backend_id();
    let results: Vec<Result<std::result::Result<FeatureSequence, String>>> = samples
        .par_iter()
        .map(|s| {
            let stats = backend.score_document(&s.id, &s.text)?;
            Ok(assemble(&stats, options, &s.id, s.label, &backend_id).map_err(|_| s.id.clone()))
        })
        .collect();
    let mut out = Extraction::default();
    for r in results {
        match r? {
            Ok(fs) => out.features.push(fs),
            Err(id) => out.rejected.push(id),
        }
    }
    Ok(out)
}

/// Holds out 1/8 of each class for validation: returns `(train', valid)`.
pub fn make_validation_split<T>(items: Vec<T>, label_of: impl Fn(&T) -> Label, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    for class in [Label::Human, Label::Machine] {
        let have = items.iter().filter(|s| label_of(s) == class).count();
        if have < MIN_PER_CLASS {
            return Err(Error::TooFewSamples {
                class: class.as_u8(),
                have,
                need: MIN_PER_CLASS,
            });
        }
    }
    Ok(stratified_split(items, label_of, 7.0 / 8.0, seed)?)
}

fn labels(set: &[FeatureSequence]) -> Vec<Label> {
    set.iter().map(|s| s.label).collect()
}

pub fn masked(spec: &ExperimentSpec, set: &[FeatureSequence]) -> Result<Vec<FeatureSequence>> {
    set.iter()
        .map(|fs| Ok(apply_mask(fs, &spec.feature_mask)?))
        .collect()
}

/// Trains the deep detector; `train` and `valid` must already be masked.
pub fn fit_stadee(spec: &ExperimentSpec, train: &[FeatureSequence], valid: &[FeatureSequence], seed: u64) -> Result<Detector> {
    let config = TrainConfig { seed, ..spec.train };
    Ok(mgtd_classifier::train(spec.model_kind, &spec.encoder, train, valid, &config)?)
}

pub fn evaluate_stadee(detector: &Detector, set: &[FeatureSequence]) -> Result<Confusion> {
    let preds: Vec<Label> = detector.predict_batch(set)?.iter().map(|p| p.label).collect();
    Ok(Confusion::from_predictions(&preds, &labels(set))?)
}

pub fn gltr_vectors(set: &[FeatureSequence]) -> Result<Vec<GltrVector>> {
    set.iter().map(|fs| Ok(GltrVector::from_features(fs)?)).collect()
}

pub fn fit_gltr(spec: &ExperimentSpec, train: &[FeatureSequence], seed: u64) -> Result<LogRegModel> {
    let config = mgtd_core::gltr::LogRegConfig { seed, ..spec.logreg };
    Ok(train_logreg(&gltr_vectors(train)?, config)?)
}

pub fn evaluate_gltr(model: &LogRegModel, set: &[FeatureSequence]) -> Result<Confusion> {
    let preds: Vec<Label> = gltr_vectors(set)?.iter().map(|v| predict_logreg(model, v).0).collect();
    Ok(Confusion::from_predictions(&preds, &labels(set))?)
}

fn check_layout(train: &[FeatureSequence], test: &[FeatureSequence]) -> Result<()> {
    let Some(a) = train.first() else {
        return Ok(());
    };
    for fs in train.iter().chain(test) {
        if fs.n_fixed() != a.n_fixed() || fs.columns() != a.columns() {
            return Err(Error::FeatureMismatch(format!(
                "sample {} is {}x{:?}, sample {} is {}x{:?}",
                fs.sample_id,
                fs.n_fixed(),
                fs.columns(),
                a.sample_id,
                a.n_fixed(),
                a.columns()
            )));
        }
    }
    Ok(())
}

fn check_disjoint(train: &[FeatureSequence], test: &[FeatureSequence]) -> Result<()> {
    let ids: HashSet<&str> = train.iter().map(|s| s.sample_id.as_str()).collect();
    match test.iter().find(|s| ids.contains(s.sample_id.as_str())) {
        Some(s) => Err(Error::Leakage(s.sample_id.clone())),
        None => Ok(()),
    }
}

/// One seed of an experiment on already extracted, unmasked features. A
/// missing `test` pool means in-domain: the train pool is split first.
pub fn run_seed(
    spec: &ExperimentSpec,
    pool: &[FeatureSequence],
    test: Option<&[FeatureSequence]>,
    seed: u64,
) -> Result<RunReport> {
    let (train_all, test) = match test {
        Some(t) => (pool.to_vec(), t.to_vec()),
        None => stratified_split(pool.to_vec(), |s| s.label, spec.split_ratio, seed)?,
    };
    check_layout(&train_all, &test)?;
    check_disjoint(&train_all, &test)?;
    let (train, valid) = make_validation_split(train_all, |s| s.label, seed)?;

    let (confusion_valid, confusion_test, history) = match spec.detector {
        DetectorKind::Stadee => {
            let (train, valid, test) = (masked(spec, &train)?, masked(spec, &valid)?, masked(spec, &test)?);
            let det = fit_stadee(spec, &train, &valid, seed)?;
            (evaluate_stadee(&det, &valid)?, evaluate_stadee(&det, &test)?, det.history.clone())
        }
        DetectorKind::Gltr => {
            let model = fit_gltr(spec, &train, seed)?;
            (evaluate_gltr(&model, &valid)?, evaluate_gltr(&model, &test)?, Vec::new())
        }
    };
    Ok(RunReport {
        seed,
        f_valid: confusion_valid.f1(),
        f_test: confusion_test.f1(),
        n_train: train.len(),
        n_valid: valid.len(),
        n_test: test.len(),
        confusion_valid,
        confusion_test,
        history,
    })
}

/// Runs every seed of `spec` on extracted features.
pub fn run_on_features(
    spec: &ExperimentSpec,
    pool: &[FeatureSequence],
    test: Option<&[FeatureSequence]>,
    backend_id: &str,
    rejected: usize,
) -> Result<EvalReport> {
    spec.validate()?;
    let start = Instant::now();
    let runs = spec
        .seeds
        .iter()
        .map(|&seed| run_seed(spec, pool, test, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::new(
        spec.clone(),
        backend_id.to_string(),
        rejected,
        runs,
        start.elapsed().as_secs_f64(),
    ))
}

pub fn load_dataset(path: &Path, corpus_tag: Option<&str>) -> Result<Vec<TextSample>> {
    if !path.exists() {
        return Err(Error::MissingDataset(path.to_path_buf()));
    }
    let mut data = read_jsonl(path)?;
    if let Some(tag) = corpus_tag {
        data.retain(|s| s.meta.corpus_tag.as_deref() == Some(tag));
    }
    Ok(data)
}

/// Loads datasets and backend named by `spec` (relative paths resolve
/// against `base` or the data directory), extracts features and runs it.
pub fn run_experiment(spec: &ExperimentSpec, base: &Path) -> Result<EvalReport> {
    spec.validate()?;
    let start = Instant::now();
    let backend = Backend::load(spec.backend.kind, &resolve_path(&spec.backend.path, base))?;
    let options = AssembleOptions::new(spec.n_fixed, spec.rank_mode)?;
    let extract = |path: &Path| -> Result<Extraction> {
        let data = load_dataset(&resolve_path(path, base), spec.corpus_tag.as_deref())?;
        let ex = extract_features(&data, backend.scorer(), &options)?;
        if ex.features.is_empty() {
            return Err(Error::NothingExtracted {
                skipped: ex.rejected.len(),
            });
        }
        Ok(ex)
    };
    let train = extract(&spec.train_data)?;
    let test = spec.test_data.as_deref().map(extract).transpose()?;
    let rejected = train.rejected.len() + test.as_ref().map_or(0, |t| t.rejected.len());
    let mut report = run_on_features(
        spec,
        &train.features,
        test.as_ref().map(|t| t.features.as_slice()),
        &backend.scorer().backend_id(),
        rejected,
    )?;
    report.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(report)
}
