//! Experiment runner: scoring, feature extraction, detector training and
//! evaluation wired together behind declarative specs.

mod backend;
mod error;
mod pipeline;
mod report;
mod spec;

pub use backend::Backend;
pub use error::{Error, Result};
pub use pipeline::{
    evaluate_gltr, evaluate_stadee, extract_features, fit_gltr, fit_stadee, gltr_vectors, load_dataset,
    make_validation_split, masked, run_experiment, run_on_features, run_seed, Extraction, MIN_PER_CLASS,
};
pub use report::{EvalReport, RunReport, REPORT_FORMAT, VALIDATION_RATIO};
pub use spec::{
    resolve_path, BackendKind, BackendRef, Configuration, DetectorKind, ExperimentSpec, DATA_DIR_ENV, SPEC_FORMAT,
};
