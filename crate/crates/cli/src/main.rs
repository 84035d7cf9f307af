use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use depai_core::evalrep;
use depai_core::featurize::NgramRange;
use depai_core::gbdt::{self, Hyperparameters};
use depai_core::pipeline::{
    self, load_bundle, load_documents, load_manifest, ExperimentConfig, ExperimentOutcome, Task,
};

/// Detect machine-generated text from dependency relation n-grams.
#[derive(Parser)]
#[command(name = "depai", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a manifest and parse every referenced CoNLL-U file.
    IngestCheck(CommonArgs),
    /// Run an experiment and write reports and model bundles.
    Train(ExperimentArgs),
    /// Run the n-gram range sweep, (1,1), (1,2) and (1,3).
    Sweep(ExperimentArgs),
    /// Re-score a bundle on the test split its config selects.
    Evaluate(EvaluateArgs),
    /// Classify CoNLL-U documents with a bundle.
    Predict(PredictArgs),
    /// List the n-grams with the highest total split gain.
    Importance(ImportanceArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML file with default values for any option; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Line-delimited JSON dataset manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// multiway-loco, multilingual or ngram-sweep.
    #[arg(long)]
    task: Option<String>,
    /// Domain to test on; "all" selects a stratified random split.
    #[arg(long)]
    held_out_domain: Option<String>,
    /// Language to train and test on.
    #[arg(long)]
    language: Option<String>,
    #[arg(long)]
    ngram_min: Option<usize>,
    #[arg(long)]
    ngram_max: Option<usize>,
    /// Let n-grams span sentence boundaries.
    #[arg(long)]
    cross_sentence_ngrams: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of importance entries in reports.
    #[arg(long)]
    top_k: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    bundle: Option<PathBuf>,
    /// Also write report.txt and report.json here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bundle: Option<PathBuf>,
    /// CoNLL-U files; standard input when empty or `-`.
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct ImportanceArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    top_k: Option<usize>,
}

/// Config file contents. Relative paths resolve against the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    manifest: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    bundle: Option<PathBuf>,
    task: Option<Task>,
    held_out_domain: Option<String>,
    language: Option<String>,
    ngram_min: Option<usize>,
    ngram_max: Option<usize>,
    cross_sentence_ngrams: Option<bool>,
    seed: Option<u64>,
    test_fraction: Option<f64>,
    top_k: Option<usize>,
    gbdt: Option<Hyperparameters>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.manifest, &mut cfg.out_dir, &mut cfg.bundle]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

fn required(value: Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    value.with_context(|| format!("--{flag} is required (as a flag or in the config file)"))
}

fn experiment_config(args: &ExperimentArgs, file: &FileConfig, forced: Option<Task>) -> Result<ExperimentConfig> {
    let task = match (forced, &args.task) {
        (Some(t), _) => t,
        (None, Some(s)) => s.parse()?,
        (None, None) => file
            .task
            .context("--task is required (as a flag or in the config file)")?,
    };
    let min = args.ngram_min.or(file.ngram_min).unwrap_or(1);
    let max = args.ngram_max.or(file.ngram_max).unwrap_or(min.max(2));
    let mut config = ExperimentConfig::new(task);
    config.ngram_range = NgramRange::new(min, max)?;
    config.cross_sentence_ngrams = args.cross_sentence_ngrams || file.cross_sentence_ngrams.unwrap_or(false);
    config.gbdt = file.gbdt.clone().unwrap_or_default();
    config.held_out_domain = args.held_out_domain.clone().or_else(|| file.held_out_domain.clone());
    config.language = args.language.clone().or_else(|| file.language.clone());
    config.seed = args.seed.or(file.seed).unwrap_or(config.seed);
    config.test_fraction = file.test_fraction.unwrap_or(config.test_fraction);
    config.top_k = args.top_k.or(file.top_k).unwrap_or(config.top_k);
    config.out_dir = args.out_dir.clone().or_else(|| file.out_dir.clone());
    config.validate()?;
    Ok(config)
}

fn ingest_check(args: CommonArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let path = required(args.manifest.or(file.manifest), "manifest")?;
    let manifest = load_manifest(&path)?;
    let docs = load_documents(&manifest.records)?;
    let mut by: [BTreeMap<&str, usize>; 3] = Default::default();
    for d in &docs {
        *by[0].entry(&d.class_label).or_default() += 1;
        *by[1].entry(&d.domain).or_default() += 1;
        *by[2].entry(&d.language).or_default() += 1;
    }
    let sentences: usize = docs.iter().map(|d| d.sentences.len()).sum();
    let labels: usize = docs.iter().map(|d| d.num_labels()).sum();
    println!(
        "{}: {} documents, {sentences} sentences, {labels} labels",
        path.display(),
        docs.len()
    );
    for (name, counts) in ["classes", "domains", "languages"].iter().zip(&by) {
        let cells: Vec<String> = counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("{name}: {}", cells.join(" "));
    }
    let empty = docs.iter().filter(|d| d.num_labels() == 0).count();
    if empty > 0 {
        println!("warning: {empty} documents have no dependency labels");
    }
    Ok(())
}

fn run(args: ExperimentArgs, forced: Option<Task>) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let config = experiment_config(&args, &file, forced)?;
    let manifest_path = required(args.common.manifest.clone().or(file.manifest.clone()), "manifest")?;
    let out_dir = required(config.out_dir.clone(), "out-dir")?;
    let manifest = load_manifest(&manifest_path)?;
    let outcome = pipeline::run_experiment(&config, &manifest)?;
    let written = pipeline::write_outcome(&outcome, &out_dir)?;
    match &outcome {
        ExperimentOutcome::Single(run) => print!("{}", evalrep::render_text(&run.report, &run.importance)),
        ExperimentOutcome::Sweep(runs) => print!("{}", pipeline::render_sweep_text(&pipeline::sweep_summary(runs))),
    }
    println!();
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let bundle_path = required(args.bundle.or(file.bundle), "bundle")?;
    let manifest_path = required(args.common.manifest.or(file.manifest), "manifest")?;
    let bundle = load_bundle(&bundle_path)?;
    let manifest = load_manifest(&manifest_path)?;
    let (report, importance) = pipeline::evaluate_bundle(&bundle, &manifest)?;
    print!("{}", evalrep::render_text(&report, &importance));
    if let Some(dir) = args.out_dir.or(file.out_dir) {
        evalrep::render_reports(&report, &importance, &dir, pipeline::REPORT_STEM)?;
    }
    Ok(())
}

fn predict(args: PredictArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let bundle = load_bundle(&required(args.bundle.or(file.bundle), "bundle")?)?;
    let inputs = if args.inputs.is_empty() {
        vec![PathBuf::from("-")]
    } else {
        args.inputs
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for input in inputs {
        let (bytes, source) = if input.as_os_str() == "-" {
            let mut buf = Vec::new();
            io::stdin().read_to_end(&mut buf).context("reading standard input")?;
            (buf, "stdin".to_string())
        } else {
            let bytes = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let stem = input
                .file_stem()
                .map_or_else(|| input.display().to_string(), |s| s.to_string_lossy().into());
            (bytes, stem)
        };
        let preds = pipeline::predict_conllu(&bundle, &bytes, &source)
            .with_context(|| format!("predicting {}", input.display()))?;
        for p in preds {
            writeln!(out, "{}", p.to_line(bundle.model.class_names()))?;
        }
    }
    Ok(())
}

fn importance(args: ImportanceArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let bundle = load_bundle(&required(args.bundle.or(file.bundle), "bundle")?)?;
    let top_k = args.top_k.or(file.top_k).unwrap_or(bundle.config.top_k);
    let ranked = gbdt::gain_importance(&bundle.model, &bundle.space, top_k)?;
    let total = bundle.model.gain_report().total();
    if ranked.is_empty() {
        bail!("the model has no splits, so no feature has positive gain");
    }
    for (rank, (ngram, gain)) in ranked.iter().enumerate() {
        println!("{:>2}. {ngram}\t{gain:.6}\t{:.2}%", rank + 1, gain / total * 100.0);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::IngestCheck(a) => ingest_check(a),
        Command::Train(a) => run(a, None),
        Command::Sweep(a) => run(a, Some(Task::NgramSweep)),
        Command::Evaluate(a) => evaluate(a),
        Command::Predict(a) => predict(a),
        Command::Importance(a) => importance(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
