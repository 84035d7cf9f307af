//! Dataset manifests, train/test protocols, experiment drivers and model
//! bundles.

mod bundle;
mod config;
mod experiment;
mod manifest;
mod predict;
mod split;

use std::path::PathBuf;

use thiserror::Error;

use crate::conllu::ConlluError;
use crate::evalrep::EvalError;
use crate::featurize::FeaturizeError;
use crate::gbdt::GbdtError;

pub use bundle::{load_bundle, save_bundle, train_fingerprint, BundleError, ModelBundle, BUNDLE_FORMAT_VERSION};
pub use config::{ExperimentConfig, Task, DEFAULT_SEED, DEFAULT_TEST_FRACTION, DEFAULT_TOP_K};
pub use experiment::{
    evaluate_bundle, render_sweep_text, run_experiment, sweep_summary, write_outcome, ExperimentOutcome, RunResult,
    SweepRow, SweepSummary, BUNDLE_FILE, REPORT_STEM, SWEEP_STEM,
};
pub use manifest::{
    load_documents, load_manifest, ConlluSource, DatasetManifest, ManifestHeader, ManifestRecord, MANIFEST_VERSION,
};
pub use predict::{predict_conllu, predict_documents, DocPrediction};
pub use split::{plan_split, split_leave_one_domain_out, split_stratified, SplitPlan, ALL};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(
        "manifest line {line}{}: {message}",
        doc_id.as_ref().map(|d| format!(" (doc_id {d:?})")).unwrap_or_default()
    )]
    Manifest {
        line: usize,
        doc_id: Option<String>,
        message: String,
    },
    #[error("document {doc_id:?}: {source}")]
    Conllu {
        doc_id: String,
        #[source]
        source: ConlluError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("split: {0}")]
    Split(String),
    #[error("training split has fewer than two classes (found [{}])", found.join(", "))]
    InsufficientClasses { found: Vec<String> },
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
    #[error(transparent)]
    Gbdt(#[from] GbdtError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
}
