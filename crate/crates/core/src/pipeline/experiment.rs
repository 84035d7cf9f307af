//! Experiment drivers: split, fit, train, predict, evaluate, persist.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bundle::{train_fingerprint, ModelBundle, BUNDLE_FORMAT_VERSION};
use super::config::{ExperimentConfig, Task};
use super::manifest::{load_documents, DatasetManifest, ManifestRecord};
use super::split::{plan_split, SplitPlan};
use super::PipelineError;
use crate::conllu::DepDocument;
use crate::evalrep::{self, EvaluationReport, SplitDescriptor};
use crate::featurize::{self, NgramRange};
use crate::gbdt;

pub const REPORT_STEM: &str = "report";
pub const BUNDLE_FILE: &str = "model.bundle";
pub const SWEEP_STEM: &str = "sweep";

/// One trained and evaluated model.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub report: EvaluationReport,
    pub importance: Vec<(String, f64)>,
    pub bundle: ModelBundle,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentOutcome {
    Single(RunResult),
    /// One run per n-gram range, in sweep order.
    Sweep(Vec<RunResult>),
}

impl ExperimentOutcome {
    pub fn runs(&self) -> &[RunResult] {
        match self {
            ExperimentOutcome::Single(r) => std::slice::from_ref(r),
            ExperimentOutcome::Sweep(rs) => rs,
        }
    }
}

/// A split with its documents loaded.
struct LoadedSplit {
    plan: SplitPlan,
    train: Vec<DepDocument>,
    test: Vec<DepDocument>,
}

fn load_split(manifest: &DatasetManifest, config: &ExperimentConfig) -> Result<LoadedSplit, PipelineError> {
    let plan = plan_split(manifest, config)?;
    let train = load_documents(&plan.train)?;
    let test = load_documents(&plan.test)?;
    Ok(LoadedSplit { plan, train, test })
}

/// Distinct values in declared order.
fn present(declared: &[String], records: &[ManifestRecord], field: fn(&ManifestRecord) -> &str) -> Vec<String> {
    declared
        .iter()
        .filter(|d| records.iter().any(|r| field(r) == d.as_str()))
        .cloned()
        .collect()
}

fn descriptor(
    manifest: &DatasetManifest,
    config: &ExperimentConfig,
    plan: &SplitPlan,
    range: NgramRange,
) -> SplitDescriptor {
    SplitDescriptor {
        task: config.task.to_string(),
        protocol: plan.protocol.clone(),
        train_domains: present(&manifest.header.domains, &plan.train, |r| &r.domain),
        train_languages: present(&manifest.header.languages, &plan.train, |r| &r.language),
        test_domain: plan.test_domain.clone(),
        test_language: plan.test_language.clone(),
        ngram_range: range.to_string(),
        seed: config.seed,
        train_docs: plan.train.len(),
        test_docs: plan.test.len(),
    }
}

fn class_indices(manifest: &DatasetManifest, docs: &[DepDocument]) -> Vec<usize> {
    docs.iter()
        .map(|d| {
            manifest
                .class_index(&d.class_label)
                .expect("manifest validation guarantees declared classes")
        })
        .collect()
}

/// Predicts `docs` with `bundle` and scores them against their labels.
fn score(
    manifest: &DatasetManifest,
    bundle: &ModelBundle,
    docs: &[DepDocument],
    descriptor: SplitDescriptor,
) -> Result<(EvaluationReport, Vec<(String, f64)>), PipelineError> {
    let x = bundle.space.transform_corpus(docs);
    let predicted: Vec<String> = (0..x.n_rows())
        .into_par_iter()
        .map(|i| bundle.model.predict_class(&x.row_vector(i)).map(str::to_string))
        .collect::<Result<_, _>>()?;
    let truth: Vec<&str> = docs.iter().map(|d| d.class_label.as_str()).collect();
    let predicted: Vec<&str> = predicted.iter().map(String::as_str).collect();
    let mut report = evalrep::evaluate(&truth, &predicted, &manifest.header.classes)?;
    report.split = descriptor;
    let importance = gbdt::gain_importance(&bundle.model, &bundle.space, bundle.config.top_k)?;
    Ok((report, importance))
}

fn train_and_evaluate(
    manifest: &DatasetManifest,
    config: &ExperimentConfig,
    split: &LoadedSplit,
    range: NgramRange,
) -> Result<RunResult, PipelineError> {
    let labels = class_indices(manifest, &split.train);
    let mut seen: Vec<usize> = labels.clone();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() < 2 {
        return Err(PipelineError::InsufficientClasses {
            found: seen.iter().map(|&i| manifest.header.classes[i].clone()).collect(),
        });
    }

    let space = featurize::fit_with(&split.train, &config.ngram_options(range))?;
    let x = space.transform_corpus(&split.train);
    let model = gbdt::train(&x, &labels, &manifest.header.classes, &config.gbdt)?;
    let bundle = ModelBundle {
        format_version: BUNDLE_FORMAT_VERSION,
        space,
        model,
        config: ExperimentConfig {
            ngram_range: range,
            out_dir: None,
            ..config.clone()
        },
        train_fingerprint: train_fingerprint(&split.train),
    };
    let (report, importance) = score(
        manifest,
        &bundle,
        &split.test,
        descriptor(manifest, config, &split.plan, range),
    )?;
    Ok(RunResult {
        report,
        importance,
        bundle,
    })
}

/// Runs the experiment `config` describes. Nothing is written to disk; see
/// [`write_outcome`].
pub fn run_experiment(
    config: &ExperimentConfig,
    manifest: &DatasetManifest,
) -> Result<ExperimentOutcome, PipelineError> {
    let split = load_split(manifest, config)?;
    match config.task {
        Task::NgramSweep => NgramRange::sweep()
            .into_iter()
            .map(|range| train_and_evaluate(manifest, config, &split, range))
            .collect::<Result<_, _>>()
            .map(ExperimentOutcome::Sweep),
        _ => train_and_evaluate(manifest, config, &split, config.ngram_range).map(ExperimentOutcome::Single),
    }
}

/// Re-scores a bundle on the test split its config snapshot selects from
/// `manifest`. Fails if the training split no longer matches the bundle's
/// fingerprint.
pub fn evaluate_bundle(
    bundle: &ModelBundle,
    manifest: &DatasetManifest,
) -> Result<(EvaluationReport, Vec<(String, f64)>), PipelineError> {
    if bundle.model.class_names() != manifest.header.classes.as_slice() {
        return Err(PipelineError::Config(format!(
            "bundle classes [{}] differ from manifest classes [{}]",
            bundle.model.class_names().join(", "),
            manifest.header.classes.join(", ")
        )));
    }
    let split = load_split(manifest, &bundle.config)?;
    let fingerprint = train_fingerprint(&split.train);
    if fingerprint != bundle.train_fingerprint {
        return Err(PipelineError::Config(format!(
            "training split fingerprint {fingerprint} does not match the bundle's {}; the manifest has changed",
            bundle.train_fingerprint
        )));
    }
    let range = bundle.space.ngram_range();
    let desc = descriptor(manifest, &bundle.config, &split.plan, range);
    score(manifest, bundle, &split.test, desc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ngram_range: NgramRange,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub task: String,
    pub protocol: String,
    pub test_domain: String,
    pub test_language: String,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

pub fn sweep_summary(runs: &[RunResult]) -> SweepSummary {
    let first = &runs[0].report.split;
    SweepSummary {
        task: first.task.clone(),
        protocol: first.protocol.clone(),
        test_domain: first.test_domain.clone(),
        test_language: first.test_language.clone(),
        seed: first.seed,
        rows: runs
            .iter()
            .map(|r| SweepRow {
                ngram_range: r.bundle.space.ngram_range(),
                precision: r.report.precision,
                recall: r.report.recall,
                f1: r.report.f1,
                accuracy: r.report.accuracy,
            })
            .collect(),
    }
}

pub fn render_sweep_text(summary: &SweepSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "task: {}", summary.task);
    let _ = writeln!(out, "protocol: {}", summary.protocol);
    let _ = writeln!(out, "seed: {}", summary.seed);
    let _ = writeln!(
        out,
        "test: domain {}; language {}",
        summary.test_domain, summary.test_language
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "ngram_range Prec Recall F1 Acc");
    for r in &summary.rows {
        let _ = writeln!(
            out,
            "{} {:.2} {:.2} {:.2} {:.2}",
            r.ngram_range, r.precision, r.recall, r.f1, r.accuracy
        );
    }
    out
}

fn write_file(path: PathBuf, contents: &[u8]) -> Result<PathBuf, PipelineError> {
    fs::write(&path, contents).map_err(|source| PipelineError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn write_run(run: &RunResult, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let (txt, json) = evalrep::render_reports(&run.report, &run.importance, dir, REPORT_STEM)?;
    let bundle = write_file(dir.join(BUNDLE_FILE), &run.bundle.to_bytes())?;
    Ok(vec![txt, json, bundle])
}

/// Writes reports and bundles under `dir`: `report.txt`, `report.json` and
/// `model.bundle` for a single run; for a sweep, `sweep.txt`, `sweep.json`
/// and one `ngram-<min>-<max>/` directory per range.
pub fn write_outcome(outcome: &ExperimentOutcome, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    match outcome {
        ExperimentOutcome::Single(run) => write_run(run, dir),
        ExperimentOutcome::Sweep(runs) => {
            let mut written = Vec::new();
            for run in runs {
                let r = run.bundle.space.ngram_range();
                let sub = dir.join(format!("ngram-{}-{}", r.min_n(), r.max_n()));
                written.extend(write_run(run, &sub)?);
            }
            let summary = sweep_summary(runs);
            let mut json = serde_json::to_string_pretty(&summary).expect("summaries serialize");
            json.push('\n');
            written.push(write_file(
                dir.join(format!("{SWEEP_STEM}.txt")),
                render_sweep_text(&summary).as_bytes(),
            )?);
            written.push(write_file(dir.join(format!("{SWEEP_STEM}.json")), json.as_bytes())?);
            Ok(written)
        }
    }
}
