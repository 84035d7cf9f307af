use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::featurize::{NgramOptions, NgramRange};
use crate::gbdt::Hyperparameters;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// Attribution across all declared classes, testing on a domain unseen
    /// in training.
    MultiwayLoco,
    /// Human vs machine within one language.
    Multilingual,
    /// Accuracy for n-gram ranges (1,1), (1,2) and (1,3) on one split.
    NgramSweep,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::MultiwayLoco => "multiway-loco",
            Task::Multilingual => "multilingual",
            Task::NgramSweep => "ngram-sweep",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Task::MultiwayLoco, Task::Multilingual, Task::NgramSweep]
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| {
                PipelineError::Config(format!(
                    "unknown task {s:?} (expected multiway-loco, multilingual or ngram-sweep)"
                ))
            })
    }
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_test_fraction() -> f64 {
    DEFAULT_TEST_FRACTION
}

fn default_top_k() -> usize {
    DEFAULT_TOP_K
}

/// Everything that determines an experiment's outputs. A snapshot is stored
/// in every bundle; `out_dir` is not part of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default)]
    pub ngram_range: NgramRange,
    #[serde(default)]
    pub cross_sentence_ngrams: bool,
    #[serde(default)]
    pub gbdt: Hyperparameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held_out_domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Test share of the stratified random split.
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(task: Task) -> Self {
        ExperimentConfig {
            task,
            ngram_range: NgramRange::default(),
            cross_sentence_ngrams: false,
            gbdt: Hyperparameters::default(),
            held_out_domain: None,
            language: None,
            seed: DEFAULT_SEED,
            test_fraction: DEFAULT_TEST_FRACTION,
            top_k: DEFAULT_TOP_K,
            out_dir: None,
        }
    }

    pub fn multiway_loco(held_out_domain: &str) -> Self {
        ExperimentConfig {
            held_out_domain: Some(held_out_domain.to_string()),
            ..Self::new(Task::MultiwayLoco)
        }
    }

    pub fn multilingual(language: &str) -> Self {
        ExperimentConfig {
            language: Some(language.to_string()),
            ..Self::new(Task::Multilingual)
        }
    }

    pub fn ngram_options(&self, range: NgramRange) -> NgramOptions {
        NgramOptions {
            range,
            cross_sentences: self.cross_sentence_ngrams,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        match self.task {
            Task::MultiwayLoco => {
                if self.held_out_domain.is_none() {
                    return bad("multiway-loco needs a held-out domain (use \"all\" for a random split)");
                }
                if self.language.is_some() {
                    return bad("multiway-loco does not take a language");
                }
            }
            Task::Multilingual => {
                if self.language.is_none() {
                    return bad("multilingual needs a target language");
                }
                if self.held_out_domain.is_some() {
                    return bad("multilingual does not take a held-out domain");
                }
            }
            Task::NgramSweep => {
                if self.language.is_some() && self.held_out_domain.is_some() {
                    return bad("ngram-sweep takes a language or a held-out domain, not both");
                }
            }
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(PipelineError::Config(format!(
                "test_fraction must be in (0, 1), got {}",
                self.test_fraction
            )));
        }
        self.gbdt.validate()?;
        Ok(())
    }
}
