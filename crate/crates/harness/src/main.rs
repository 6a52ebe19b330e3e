use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use mgtd_classifier::{load_checkpoint, save_checkpoint, Detector};
use mgtd_core::features::{
    apply_mask, assemble, read_features, write_features, AssembleOptions, FeatureColumn, FeatureSequence,
    FeatureSubsetMask, RankMode,
};
use mgtd_core::generation::{build_completion_dataset, clean_text, split_into_documents, GenerationRecipe};
use mgtd_core::gltr::{emit_html_report, predict_logreg, GltrVector, LogRegModel};
use mgtd_core::sample::{read_jsonl, write_jsonl};
use mgtd_core::scoring::{train_ngram, LanguageModel, TokenUnit};
use mgtd_core::split::stratified_split;
use mgtd_core::{Label, TextSample, BUNDLED_CORPUS};
use mgtd_harness::{
    evaluate_gltr, evaluate_stadee, extract_features, fit_gltr, fit_stadee, load_dataset, make_validation_split,
    masked, run_experiment, Backend, BackendKind, BackendRef, Configuration, DetectorKind, EvalReport,
    ExperimentSpec, RunReport,
};
use serde::Deserialize;

/// Detects machine-generated text from per-token statistics of a scoring
/// model.
#[derive(Parser)]
#[command(name = "mgtd", version)]
struct Cli {
    /// Overrides the seed of the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML config: a generation recipe for `build-dataset`, n-gram settings
    /// for `train-backend`, an experiment spec for everything else.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Builds a labeled JSONL dataset by completing corpus prompts.
    BuildDataset {
        /// Plain text or JSONL corpus; the bundled novel when omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// N-gram model used as the generator.
        #[arg(long)]
        generator: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Minimum characters per document when splitting plain text.
        #[arg(long, default_value_t = 200)]
        min_chars: usize,
    },
    /// Trains an n-gram scoring model.
    TrainBackend {
        /// Plain text or JSONL corpus; the bundled novel when omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        /// `char` or `word`.
        #[arg(long)]
        unit: Option<String>,
    },
    /// Scores a JSONL dataset and writes a feature file.
    Extract {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        backend: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n_fixed: Option<usize>,
        /// `log10` or `raw`.
        #[arg(long)]
        rank_mode: Option<String>,
    },
    /// Trains a detector on a feature file.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluates a trained detector and writes a report.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        /// Test features; for in-domain specs, the whole pool.
        #[arg(long)]
        features: PathBuf,
        /// Training features, needed to rebuild the validation set unless
        /// the spec is in-domain.
        #[arg(long)]
        train_features: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classifies one text.
    Detect {
        #[arg(long)]
        backend: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: TextInput,
    },
    /// Writes a color-coded HTML rank report for one text.
    GltrReport {
        #[arg(long)]
        backend: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        input: TextInput,
    },
    /// Runs a whole experiment spec.
    Run {
        /// Experiment spec; defaults to `--config`.
        spec: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct TextInput {
    #[arg(long)]
    text: Option<String>,
    /// File holding the text.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Sample id to look up in a score-stream backend.
    #[arg(long)]
    sample_id: Option<String>,
}

impl TextInput {
    /// `(sample id, text)`.
    fn resolve(&self) -> Result<(String, String)> {
        let id = self.sample_id.clone().unwrap_or_else(|| "input".into());
        match (&self.text, &self.input) {
            (Some(t), _) => Ok((id, t.clone())),
            (_, Some(p)) => Ok((id, read_text(p)?)),
            _ => Ok((id, String::new())),
        }
    }
}

#[derive(Deserialize)]
#[serde(default)]
struct NgramSettings {
    order: usize,
    alpha: f64,
    unit: TokenUnit,
    min_chars: usize,
}

impl Default for NgramSettings {
    fn default() -> Self {
        NgramSettings {
            order: 3,
            alpha: 1.0,
            unit: TokenUnit::Char,
            min_chars: 200,
        }
    }
}

struct CliError {
    code: &'static str,
    message: String,
}

impl CliError {
    fn new(code: &'static str, message: impl Display) -> Self {
        CliError {
            code,
            message: message.to_string(),
        }
    }
}

impl From<mgtd_harness::Error> for CliError {
    fn from(e: mgtd_harness::Error) -> Self {
        CliError::new(e.code(), e)
    }
}

impl From<mgtd_core::Error> for CliError {
    fn from(e: mgtd_core::Error) -> Self {
        CliError::new(e.code(), e)
    }
}

impl From<mgtd_classifier::Error> for CliError {
    fn from(e: mgtd_classifier::Error) -> Self {
        CliError::new(e.code(), e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            fail(&CliError::new("usage", first.trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            fail(&e);
            ExitCode::FAILURE
        }
    }
}

fn fail(e: &CliError) {
    let message = e.message.replace(['\n', '\r'], " ");
    eprintln!("error: code={} msg={message}", e.code);
}

fn dispatch(cli: &Cli) -> Result<()> {
    let config = cli.config.as_deref();
    match &cli.command {
        Command::BuildDataset {
            corpus,
            generator,
            out,
            min_chars,
        } => build_dataset(config, cli.seed, corpus.as_deref(), generator, out, *min_chars),
        Command::TrainBackend {
            corpus,
            out,
            order,
            alpha,
            unit,
        } => {
            let mut settings: NgramSettings = match config {
                Some(p) => parse_toml(p)?,
                None => NgramSettings::default(),
            };
            settings.order = order.unwrap_or(settings.order);
            settings.alpha = alpha.unwrap_or(settings.alpha);
            if let Some(u) = unit {
                settings.unit = parse_unit(u)?;
            }
            let docs = load_corpus(corpus.as_deref(), settings.min_chars, None)?;
            let model = train_ngram(&docs, settings.order, settings.alpha, settings.unit)?;
            model.save(out)?;
            eprintln!("trained {} on {} documents", model.backend_id(), docs.len());
            Ok(())
        }
        Command::Extract {
            data,
            backend,
            out,
            n_fixed,
            rank_mode,
        } => {
            let spec = load_spec(config)?;
            let n_fixed = n_fixed.or(spec.as_ref().map(|s| s.n_fixed)).unwrap_or(mgtd_core::features::DEFAULT_N_FIXED);
            let rank_mode = match rank_mode {
                Some(m) => parse_rank_mode(m)?,
                None => spec.as_ref().map(|s| s.rank_mode).unwrap_or_default(),
            };
            let samples = load_dataset(data, spec.as_ref().and_then(|s| s.corpus_tag.as_deref()))?;
            let backend = Backend::open(backend)?;
            let ex = extract_features(&samples, backend.scorer(), &AssembleOptions::new(n_fixed, rank_mode)?)?;
            if ex.features.is_empty() {
                return Err(mgtd_harness::Error::NothingExtracted {
                    skipped: ex.rejected.len(),
                }
                .into());
            }
            write_features(out, &ex.features)?;
            eprintln!("extracted {} samples, rejected {} too short", ex.features.len(), ex.rejected.len());
            Ok(())
        }
        Command::Train { features, out } => train(config, cli.seed, features, out),
        Command::Evaluate {
            model,
            features,
            train_features,
            out,
        } => {
            let report = evaluate(config, cli.seed, model, features, train_features.as_deref())?;
            emit_report(&report, out.as_deref())
        }
        Command::Detect { backend, model, input } => detect(config, backend, model, input),
        Command::GltrReport { backend, out, input } => {
            let backend = Backend::open(backend)?;
            let (id, text) = input.resolve()?;
            let (tokens, stats): (Vec<String>, _) = match backend.ngram() {
                Some(m) => {
                    let seq = m.vocab().tokenize(&text, &id)?;
                    let tokens = seq.ids.iter().map(|&t| m.vocab().surface(t).to_string()).collect();
                    (tokens, backend.scorer().score(&seq)?)
                }
                None => {
                    let stats = backend.scorer().score_document(&id, &text)?;
                    (stats.iter().map(|s| format!("#{} ", s.token_id)).collect(), stats)
                }
            };
            emit_html_report(&format!("Rank report: {id}"), &tokens, &stats, out)?;
            Ok(())
        }
        Command::Run { spec, out } => {
            let path = spec
                .as_deref()
                .or(config)
                .ok_or_else(|| CliError::new("usage", "run needs a spec path or --config"))?;
            let mut spec = ExperimentSpec::load(path)?;
            if let Some(seed) = cli.seed {
                spec.seeds = vec![seed];
            }
            let base = path.parent().unwrap_or(Path::new("."));
            let report = run_experiment(&spec, base)?;
            emit_report(&report, out.as_deref())
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))
}

fn parse_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    toml::from_str(&read_text(path)?).map_err(|e| CliError::new("malformed-file", format!("{}: {e}", path.display())))
}

fn parse_unit(s: &str) -> Result<TokenUnit> {
    match s {
        "char" => Ok(TokenUnit::Char),
        "word" => Ok(TokenUnit::Word),
        _ => Err(CliError::new("usage", format!("unknown token unit {s:?}, expected char or word"))),
    }
}

fn parse_rank_mode(s: &str) -> Result<RankMode> {
    match s {
        "log10" => Ok(RankMode::Log10),
        "raw" => Ok(RankMode::Raw),
        _ => Err(CliError::new("usage", format!("unknown rank mode {s:?}, expected log10 or raw"))),
    }
}

fn load_spec(config: Option<&Path>) -> Result<Option<ExperimentSpec>> {
    config.map(|p| Ok(ExperimentSpec::load(p)?)).transpose()
}

/// The configured spec, or an out-of-domain STADEE spec with default
/// hyperparameters, pinned to a single seed.
fn spec_or_default(config: Option<&Path>, seed: Option<u64>, data: &Path) -> Result<(ExperimentSpec, u64)> {
    let mut spec = match load_spec(config)? {
        Some(s) => s,
        None => {
            let backend = BackendRef {
                kind: BackendKind::Ngram,
                path: PathBuf::new(),
            };
            let mut s = ExperimentSpec::in_domain("cli", data, backend);
            s.configuration = Configuration::OutOfDomain;
            s
        }
    };
    let seed = seed.unwrap_or(spec.seeds[0]);
    spec.seeds = vec![seed];
    Ok((spec, seed))
}

fn load_corpus(path: Option<&Path>, min_chars: usize, tag: Option<&str>) -> Result<Vec<TextSample>> {
    let docs = match path {
        Some(p) if p.extension().is_some_and(|e| e == "jsonl") => read_jsonl(p)?,
        Some(p) => {
            let text = clean_text(&read_text(p)?, &Default::default())?;
            let prefix = p.file_stem().map_or("doc".into(), |s| s.to_string_lossy().into_owned());
            split_into_documents(&text, min_chars, &prefix, tag)
        }
        None => {
            let text = clean_text(BUNDLED_CORPUS, &Default::default())?;
            split_into_documents(&text, min_chars, "doc", Some(tag.unwrap_or("eighty-days")))
        }
    };
    if docs.is_empty() {
        return Err(mgtd_core::Error::EmptyCorpus.into());
    }
    Ok(docs)
}

fn build_dataset(
    config: Option<&Path>,
    seed: Option<u64>,
    corpus: Option<&Path>,
    generator: &Path,
    out: &Path,
    min_chars: usize,
) -> Result<()> {
    let mut recipe: GenerationRecipe = match config {
        Some(p) => parse_toml(p)?,
        None => GenerationRecipe::default(),
    };
    if let Some(seed) = seed {
        recipe.seed = seed;
        recipe.decoding.seed = seed;
    }
    let docs = load_corpus(corpus, min_chars, recipe.corpus_tag.as_deref())?;
    let backend = Backend::open(generator)?;
    let model = backend
        .ngram()
        .ok_or_else(|| CliError::new("usage", "the generator must be an n-gram model"))?;
    let data = build_completion_dataset(&docs, model, &recipe)?;
    write_jsonl(out, &data)?;
    let machine = data.iter().filter(|s| s.label == Label::Machine).count();
    eprintln!("wrote {machine} machine and {} human samples", data.len() - machine);
    Ok(())
}

/// `(train', valid, test)` exactly as `run` would build them for one seed.
fn partition(
    spec: &ExperimentSpec,
    features: Vec<FeatureSequence>,
    train_features: Option<Vec<FeatureSequence>>,
    seed: u64,
) -> Result<(Vec<FeatureSequence>, Vec<FeatureSequence>, Vec<FeatureSequence>)> {
    let (train_all, test) = match (spec.configuration, train_features) {
        (Configuration::InDomain, _) => stratified_split(features, |s| s.label, spec.split_ratio, seed)?,
        (_, Some(train)) => (train, features),
        (_, None) => return Err(CliError::new("usage", "--train-features is required unless the spec is in-domain")),
    };
    let (train, valid) = make_validation_split(train_all, |s| s.label, seed)?;
    Ok((train, valid, test))
}

fn train(config: Option<&Path>, seed: Option<u64>, features: &Path, out: &Path) -> Result<()> {
    let (spec, seed) = spec_or_default(config, seed, features)?;
    let pool = read_features(features)?;
    let (train, valid, _) = match spec.configuration {
        Configuration::InDomain => partition(&spec, pool, None, seed)?,
        _ => partition(&spec, Vec::new(), Some(pool), seed)?,
    };
    match spec.detector {
        DetectorKind::Stadee => {
            let detector = fit_stadee(&spec, &masked(&spec, &train)?, &masked(&spec, &valid)?, seed)?;
            save_checkpoint(&detector, out)?;
            if let Some(last) = detector.history.last() {
                eprintln!("trained {} epochs, validation F1 {:.2}", last.epoch, last.val_f1);
            }
        }
        DetectorKind::Gltr => fit_gltr(&spec, &train, seed)?.save(out)?,
    }
    Ok(())
}

enum Model {
    Stadee(Detector),
    Gltr(LogRegModel),
}

fn load_model(path: &Path) -> Result<Model> {
    let bytes = std::fs::read(path).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
    if bytes.starts_with(b"STCK") {
        Ok(Model::Stadee(load_checkpoint(path)?))
    } else {
        Ok(Model::Gltr(LogRegModel::load(path)?))
    }
}

/// Mask selecting exactly the columns a detector was trained on.
fn mask_for(columns: &[FeatureColumn]) -> FeatureSubsetMask {
    let has = |c: &[FeatureColumn]| c.iter().any(|x| columns.contains(x));
    FeatureSubsetMask {
        p: has(&[FeatureColumn::Probability]),
        r: has(&[FeatureColumn::LogRank, FeatureColumn::RawRank]),
        c: has(&[FeatureColumn::CumulativeProbability]),
        e: has(&[FeatureColumn::Entropy]),
    }
}

fn evaluate(
    config: Option<&Path>,
    seed: Option<u64>,
    model: &Path,
    features: &Path,
    train_features: Option<&Path>,
) -> Result<EvalReport> {
    let start = Instant::now();
    let (mut spec, seed) = spec_or_default(config, seed, features)?;
    let pool = read_features(features)?;
    let backend_id = pool.first().map(|f| f.backend_id.clone()).unwrap_or_default();
    let train_pool = train_features.map(read_features).transpose()?;
    let (train, valid, test) = partition(&spec, pool, train_pool, seed)?;
    let (confusion_valid, confusion_test, history) = match load_model(model)? {
        Model::Stadee(det) => {
            spec.feature_mask = mask_for(det.columns());
            let (valid, test) = (masked(&spec, &valid)?, masked(&spec, &test)?);
            (evaluate_stadee(&det, &valid)?, evaluate_stadee(&det, &test)?, det.history.clone())
        }
        Model::Gltr(m) => {
            spec.detector = DetectorKind::Gltr;
            (evaluate_gltr(&m, &valid)?, evaluate_gltr(&m, &test)?, Vec::new())
        }
    };
    let run = RunReport {
        seed,
        f_valid: confusion_valid.f1(),
        f_test: confusion_test.f1(),
        n_train: train.len(),
        n_valid: valid.len(),
        n_test: test.len(),
        confusion_valid,
        confusion_test,
        history,
    };
    Ok(EvalReport::new(spec, backend_id, 0, vec![run], start.elapsed().as_secs_f64()))
}

fn detect(config: Option<&Path>, backend: &Path, model: &Path, input: &TextInput) -> Result<()> {
    let backend = Backend::open(backend)?;
    let (id, text) = input.resolve()?;
    let stats = backend.scorer().score_document(&id, &text)?;
    let backend_id = backend.scorer().backend_id();
    let (label, p_machine) = match load_model(model)? {
        Model::Stadee(det) => {
            let rank_mode = if det.columns().contains(&FeatureColumn::RawRank) {
                RankMode::Raw
            } else {
                RankMode::Log10
            };
            let options = AssembleOptions::new(det.n_fixed(), rank_mode)?;
            let fs = assemble(&stats, &options, &id, Label::Human, &backend_id).map_err(mgtd_core::Error::from)?;
            let p = det.predict(&apply_mask(&fs, &mask_for(det.columns()))?)?;
            (p.label, p.p_machine)
        }
        Model::Gltr(m) => {
            let n_fixed = load_spec(config)?.map_or(mgtd_core::features::DEFAULT_N_FIXED, |s| s.n_fixed);
            let options = AssembleOptions::new(n_fixed, RankMode::Log10)?;
            let fs = assemble(&stats, &options, &id, Label::Human, &backend_id).map_err(mgtd_core::Error::from)?;
            predict_logreg(&m, &GltrVector::from_features(&fs)?)
        }
    };
    let name = match label {
        Label::Human => "human",
        Label::Machine => "machine",
    };
    println!("label={name} p_machine={p_machine:.6}");
    Ok(())
}

fn emit_report(report: &EvalReport, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => report.save(p)?,
        None => print!("{}", report.to_toml()?),
    }
    eprintln!("F_valid {:.2}  F_test {:.2}", report.f_valid, report.f_test);
    Ok(())
}
