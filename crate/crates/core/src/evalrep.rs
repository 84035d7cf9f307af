//! Classification metrics and report rendering.
//!
//! Precision, recall and F1 are computed per class and macro-averaged
//! without weighting. A metric whose denominator is zero counts as 0 for that
//! class. Micro averages are carried alongside for comparison. All reported
//! values are percentages.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("cannot evaluate an empty label list")]
    Empty,
    #[error("label {0:?} is not one of the declared classes")]
    UnknownLabel(String),
    #[error("failed to write report {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_labels<S: AsRef<str>>(truth: &[S], predicted: &[S], class_names: &[String]) -> Result<Self, EvalError> {
        if truth.len() != predicted.len() {
            return Err(EvalError::LengthMismatch {
                truth: truth.len(),
                predicted: predicted.len(),
            });
        }
        if truth.is_empty() {
            return Err(EvalError::Empty);
        }
        let index = |label: &str| {
            class_names
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| EvalError::UnknownLabel(label.to_string()))
        };
        let k = class_names.len();
        let mut counts = vec![vec![0u64; k]; k];
        for (t, p) in truth.iter().zip(predicted) {
            counts[index(t.as_ref())?][index(p.as_ref())?] += 1;
        }
        Ok(ConfusionMatrix {
            class_names: class_names.to_vec(),
            counts,
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn errors(&self) -> u64 {
        self.total() - self.correct()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Share of all misclassifications attributed to each predicted class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ErrorDistribution {
    NoErrors,
    Errors {
        total_errors: u64,
        /// `(predicted class, percent of errors)` in class order.
        shares: Vec<(String, f64)>,
    },
}

/// What was trained on and what was tested.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitDescriptor {
    pub task: String,
    pub protocol: String,
    pub train_domains: Vec<String>,
    pub train_languages: Vec<String>,
    pub test_domain: String,
    pub test_language: String,
    pub ngram_range: String,
    pub seed: u64,
    pub train_docs: usize,
    pub test_docs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub split: SplitDescriptor,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: ConfusionMatrix,
    pub error_distribution: ErrorDistribution,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn evaluate<S: AsRef<str>>(
    truth: &[S],
    predicted: &[S],
    class_names: &[String],
) -> Result<EvaluationReport, EvalError> {
    let confusion = ConfusionMatrix::from_labels(truth, predicted, class_names)?;
    Ok(report_from_confusion(confusion))
}

pub fn report_from_confusion(confusion: ConfusionMatrix) -> EvaluationReport {
    let k = confusion.class_names.len();
    let c = &confusion.counts;
    let mut per_class = Vec::with_capacity(k);
    let (mut tp_sum, mut fp_sum, mut fn_sum) = (0u64, 0u64, 0u64);
    for i in 0..k {
        let tp = c[i][i];
        let predicted: u64 = (0..k).map(|r| c[r][i]).sum();
        let actual: u64 = c[i].iter().sum();
        let (fp, fn_) = (predicted - tp, actual - tp);
        tp_sum += tp;
        fp_sum += fp;
        fn_sum += fn_;
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        per_class.push(ClassMetrics {
            class: confusion.class_names[i].clone(),
            precision,
            recall,
            f1: harmonic(precision, recall),
            support: actual,
        });
    }
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k as f64 * 100.0;
    let micro_p = ratio(tp_sum, tp_sum + fp_sum);
    let micro_r = ratio(tp_sum, tp_sum + fn_sum);

    EvaluationReport {
        split: SplitDescriptor::default(),
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
        accuracy: ratio(confusion.correct(), confusion.total()) * 100.0,
        micro_precision: micro_p * 100.0,
        micro_recall: micro_r * 100.0,
        micro_f1: harmonic(micro_p, micro_r) * 100.0,
        per_class: per_class
            .into_iter()
            .map(|m| ClassMetrics {
                precision: m.precision * 100.0,
                recall: m.recall * 100.0,
                f1: m.f1 * 100.0,
                ..m
            })
            .collect(),
        error_distribution: error_distribution(&confusion),
        confusion,
    }
}

pub fn error_distribution(confusion: &ConfusionMatrix) -> ErrorDistribution {
    let total = confusion.errors();
    if total == 0 {
        return ErrorDistribution::NoErrors;
    }
    let k = confusion.class_names.len();
    let shares = (0..k)
        .map(|col| {
            let off_diag: u64 = (0..k).filter(|&r| r != col).map(|r| confusion.counts[r][col]).sum();
            (
                confusion.class_names[col].clone(),
                off_diag as f64 / total as f64 * 100.0,
            )
        })
        .collect();
    ErrorDistribution::Errors {
        total_errors: total,
        shares,
    }
}

/// `Prec Recall F1 Acc` at two decimals, space separated.
pub fn metrics_row(report: &EvaluationReport) -> String {
    format!(
        "{:.2} {:.2} {:.2} {:.2}",
        report.precision, report.recall, report.f1, report.accuracy
    )
}

/// The structured form of a rendered report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    #[serde(flatten)]
    pub report: EvaluationReport,
    pub importance: Vec<ImportanceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub ngram: String,
    pub gain: f64,
}

pub fn render_json(report: &EvaluationReport, importance: &[(String, f64)]) -> String {
    let doc = ReportDocument {
        report: report.clone(),
        importance: importance
            .iter()
            .map(|(ngram, gain)| ImportanceEntry {
                ngram: ngram.clone(),
                gain: *gain,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("reports always serialize");
    s.push('\n');
    s
}

pub fn render_text(report: &EvaluationReport, importance: &[(String, f64)]) -> String {
    let split = &report.split;
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "task: {}", split.task);
    let _ = writeln!(w, "protocol: {}", split.protocol);
    let _ = writeln!(w, "seed: {}", split.seed);
    let _ = writeln!(w, "ngram range: {}", split.ngram_range);
    let _ = writeln!(
        w,
        "train: {} docs; domains [{}]; languages [{}]",
        split.train_docs,
        split.train_domains.join(", "),
        split.train_languages.join(", ")
    );
    let _ = writeln!(
        w,
        "test: {} docs; domain {}; language {}",
        split.test_docs, split.test_domain, split.test_language
    );
    let _ = writeln!(w);

    let _ = writeln!(w, "== Metrics (macro) ==");
    let _ = writeln!(w, "Prec Recall F1 Acc");
    let _ = writeln!(w, "{}", metrics_row(report));
    let _ = writeln!(
        w,
        "micro: {:.2} {:.2} {:.2}",
        report.micro_precision, report.micro_recall, report.micro_f1
    );
    let _ = writeln!(w);

    let name_width = report.per_class.iter().map(|m| m.class.len()).max().unwrap_or(0).max(5);
    let _ = writeln!(w, "== Per class ==");
    let _ = writeln!(
        w,
        "{:<name_width$} {:>7} {:>7} {:>7} {:>7}",
        "class", "Prec", "Recall", "F1", "Support"
    );
    for m in &report.per_class {
        let _ = writeln!(
            w,
            "{:<name_width$} {:>7.2} {:>7.2} {:>7.2} {:>7}",
            m.class, m.precision, m.recall, m.f1, m.support
        );
    }
    let _ = writeln!(w);

    let _ = writeln!(w, "== Confusion matrix (rows: true, columns: predicted) ==");
    let _ = writeln!(w, "{}", report.confusion.class_names.join("\t"));
    for (name, row) in report.confusion.class_names.iter().zip(&report.confusion.counts) {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        let _ = writeln!(w, "{}\t{}", cells.join("\t"), name);
    }
    let _ = writeln!(w);

    let _ = writeln!(w, "== Error distribution by predicted class ==");
    match &report.error_distribution {
        ErrorDistribution::NoErrors => {
            let _ = writeln!(w, "no errors");
        }
        ErrorDistribution::Errors { total_errors, shares } => {
            let _ = writeln!(w, "total errors: {total_errors}");
            for (class, pct) in shares {
                let _ = writeln!(w, "{class:<name_width$} {pct:>6.2}%");
            }
        }
    }
    let _ = writeln!(w);

    let _ = writeln!(w, "== Top-{} feature importance by gain ==", importance.len());
    for (rank, (ngram, gain)) in importance.iter().enumerate() {
        let _ = writeln!(w, "{:>2}. {ngram}\t{gain:.6}", rank + 1);
    }
    out
}

/// Writes `<stem>.txt` and `<stem>.json` into `dir`.
pub fn render_reports(
    report: &EvaluationReport,
    importance: &[(String, f64)],
    dir: &Path,
    stem: &str,
) -> Result<(PathBuf, PathBuf), EvalError> {
    let write = |path: PathBuf, contents: String| {
        fs::write(&path, contents)
            .map(|_| path.clone())
            .map_err(|source| EvalError::Io { path, source })
    };
    fs::create_dir_all(dir).map_err(|source| EvalError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let txt = write(dir.join(format!("{stem}.txt")), render_text(report, importance))?;
    let json = write(dir.join(format!("{stem}.json")), render_json(report, importance))?;
    Ok((txt, json))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn perfect_predictions() {
        let truth = ["a", "b", "c", "a"];
        let r = evaluate(&truth, &truth, &classes(&["a", "b", "c"])).unwrap();
        assert_eq!((r.precision, r.recall, r.f1, r.accuracy), (100.0, 100.0, 100.0, 100.0));
        assert_eq!(metrics_row(&r), "100.00 100.00 100.00 100.00");
        assert_eq!(r.error_distribution, ErrorDistribution::NoErrors);
    }

    #[test]
    fn worked_two_class_example() {
        let r = evaluate(&["A", "A", "B", "B"], &["A", "B", "B", "B"], &classes(&["A", "B"])).unwrap();
        assert_eq!(metrics_row(&r), "83.33 75.00 73.33 75.00");
        assert!((r.f1 - (200.0 / 3.0 + 80.0) / 2.0).abs() < 1e-12);
        assert_eq!(r.micro_f1, 75.0);
    }

    #[test]
    fn absent_class_contributes_zero() {
        let r = evaluate(&["A", "B"], &["A", "B"], &classes(&["A", "B", "C"])).unwrap();
        assert!((r.precision - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.per_class[2].f1, 0.0);
        assert_eq!(r.accuracy, 100.0);
    }

    #[test]
    fn input_errors() {
        let names = classes(&["A", "B"]);
        assert!(matches!(
            evaluate(&["A"], &["A", "B"], &names),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(evaluate::<&str>(&[], &[], &names), Err(EvalError::Empty)));
        assert!(matches!(evaluate(&["A"], &["Z"], &names), Err(EvalError::UnknownLabel(l)) if l == "Z"));
    }

    #[test]
    fn error_shares_by_predicted_column() {
        let cm = ConfusionMatrix {
            class_names: classes(&["A", "B"]),
            counts: vec![vec![3, 1], vec![2, 4]],
        };
        match error_distribution(&cm) {
            ErrorDistribution::Errors { total_errors, shares } => {
                assert_eq!(total_errors, 3);
                assert_eq!(shares[0].0, "A");
                assert!((shares[0].1 - 200.0 / 3.0).abs() < 1e-12);
                assert!((shares[1].1 - 100.0 / 3.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn error_shares_include_zero_columns() {
        let cm = ConfusionMatrix {
            class_names: classes(&["A", "B", "C"]),
            counts: vec![vec![1, 0, 2], vec![0, 1, 1], vec![0, 0, 5]],
        };
        let ErrorDistribution::Errors { shares, .. } = error_distribution(&cm) else {
            panic!()
        };
        assert_eq!(shares.iter().map(|s| s.1).collect::<Vec<_>>(), vec![0.0, 0.0, 100.0]);
    }

    #[test]
    fn text_and_json_rendering() {
        let r = evaluate(&["A", "B"], &["A", "A"], &classes(&["A", "B"])).unwrap();
        let text = render_text(&r, &[("dep".to_string(), 12.5)]);
        assert!(text.contains("\n 1. dep\t12.500000\n"));
        assert!(text.contains("A     100.00%"));
        let empty = render_text(&r, &[]);
        assert!(empty.contains("== Top-0 feature importance by gain ==\n"));

        let json = render_json(&r, &[("dep".to_string(), 12.5)]);
        let back: ReportDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back.report, r);
        assert_eq!(back.importance[0].ngram, "dep");
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let r = evaluate(&["A", "B"], &["A", "B"], &classes(&["A", "B"])).unwrap();
        assert!(matches!(
            render_reports(&r, &[], &blocker.join("sub"), "report"),
            Err(EvalError::Io { .. })
        ));
        let (txt, json) = render_reports(&r, &[], dir.path(), "report").unwrap();
        assert!(txt.exists() && json.exists());
    }
}
