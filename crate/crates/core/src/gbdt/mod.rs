//! Gradient-boosted decision trees over sparse rows.
//!
//! Each round fits one regression tree per raw output (one for the binary
//! logistic objective, one per class for softmax) to the second-order
//! expansion of the log-loss. Trees grow leaf-wise: the leaf whose best split
//! has the largest gain is split next until `max_leaves` is reached or no
//! leaf has a split with positive gain.
//!
//! Split gain is `G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)` and leaf values
//! are `-learning_rate * G / (H + l)`, with `l = lambda_l2`. Zero entries are
//! never ordered against nonzero values: every split carries a default
//! direction for them, chosen to maximize gain.
//!
//! Training is deterministic. There is no row or feature sampling, features
//! are scanned in ascending index order, thresholds in ascending order, and
//! ties always keep the earlier candidate.

mod binning;
mod learner;
mod objective;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::featurize::FeatureSpace;
use crate::sparse::{SparseMatrix, SparseVector};
use binning::BinnedMatrix;
use learner::{GradStats, TreeLearner};

pub use objective::{sigmoid, softmax, Objective};

#[derive(Debug, Error, PartialEq)]
pub enum GbdtError {
    #[error("training labels contain a single class; at least two are required")]
    SingleClass,
    #[error("need at least 2 class names, got {0}")]
    TooFewClasses(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("label {label} at row {row} is outside 0..{n_classes}")]
    LabelOutOfRange { row: usize, label: usize, n_classes: usize },
    #[error("feature index {index} is out of range for dimension {dim}")]
    FeatureOutOfRange { index: usize, dim: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("malformed model: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub num_rounds: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub min_samples_per_leaf: usize,
    pub min_gain_to_split: f64,
    /// Bins over nonzero values, per feature; zero always has its own bin.
    pub histogram_bins: usize,
    pub lambda_l2: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            num_rounds: 100,
            learning_rate: 0.1,
            max_leaves: 31,
            min_samples_per_leaf: 20,
            min_gain_to_split: 0.0,
            histogram_bins: 255,
            lambda_l2: 1.0,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<(), GbdtError> {
        let bad = |msg: String| Err(GbdtError::InvalidHyperparameter(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.max_leaves < 2 {
            return bad(format!("max_leaves must be at least 2, got {}", self.max_leaves));
        }
        if self.min_samples_per_leaf == 0 {
            return bad("min_samples_per_leaf must be at least 1".into());
        }
        if !(self.min_gain_to_split >= 0.0) {
            return bad(format!(
                "min_gain_to_split must be >= 0, got {}",
                self.min_gain_to_split
            ));
        }
        if self.histogram_bins == 0 || self.histogram_bins > u32::MAX as usize {
            return bad(format!("histogram_bins out of range: {}", self.histogram_bins));
        }
        if !(self.lambda_l2 >= 0.0 && self.lambda_l2.is_finite()) {
            return bad(format!("lambda_l2 must be >= 0, got {}", self.lambda_l2));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature: usize,
        /// Nonzero values `<= threshold` go left.
        threshold: f64,
        /// Direction for zero or absent values.
        default_left: bool,
        left: usize,
        right: usize,
        gain: f64,
    },
    Leaf {
        value: f64,
    },
}

/// A regression tree stored in pre-order; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    fn from_arena(arena: &[TreeNode]) -> Self {
        let mut nodes = Vec::with_capacity(arena.len());
        Self::emit(arena, 0, &mut nodes);
        Tree { nodes }
    }

    fn emit(arena: &[TreeNode], at: usize, out: &mut Vec<TreeNode>) -> usize {
        let me = out.len();
        out.push(arena[at]);
        if let TreeNode::Split { left, right, .. } = arena[at] {
            let l = Self::emit(arena, left, out);
            let r = Self::emit(arena, right, out);
            if let TreeNode::Split { left, right, .. } = &mut out[me] {
                *left = l;
                *right = r;
            }
        }
        me
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    pub fn predict(&self, x: &SparseVector) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                    ..
                } => {
                    let v = x.get(feature);
                    let go_left = if v == 0.0 { default_left } else { v <= threshold };
                    at = if go_left { left } else { right };
                }
            }
        }
    }

    fn validate(&self, feature_dim: usize) -> Result<(), GbdtError> {
        if self.nodes.is_empty() {
            return Err(GbdtError::Malformed("empty tree".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if let TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                gain,
                ..
            } = *node
            {
                if feature >= feature_dim {
                    return Err(GbdtError::Malformed(format!(
                        "split on feature {feature} beyond dimension {feature_dim}"
                    )));
                }
                if !(left > i && right > left && right < self.nodes.len()) {
                    return Err(GbdtError::Malformed(format!("node {i} has invalid children")));
                }
                if !threshold.is_finite() || !(gain >= 0.0) {
                    return Err(GbdtError::Malformed(format!("node {i} has invalid threshold or gain")));
                }
            }
        }
        Ok(())
    }
}

/// Per-feature total split gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub gains: Vec<f64>,
}

impl GainReport {
    pub fn total(&self) -> f64 {
        self.gains.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    objective: Objective,
    class_names: Vec<String>,
    feature_dim: usize,
    learning_rate: f64,
    base_score: Vec<f64>,
    hyperparameters: Hyperparameters,
    /// `trees[round][output]`.
    trees: Vec<Vec<Tree>>,
    gain: GainReport,
}

/// Per-round training diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    /// Mean training log-loss before round 1 and after each round.
    pub loss: Vec<f64>,
    /// Final raw scores of every training row.
    pub raw_scores: Vec<Vec<f64>>,
}

pub fn train(
    x: &SparseMatrix,
    y: &[usize],
    class_names: &[String],
    params: &Hyperparameters,
) -> Result<GbdtModel, GbdtError> {
    train_traced(x, y, class_names, params).map(|(m, _)| m)
}

pub fn train_traced(
    x: &SparseMatrix,
    y: &[usize],
    class_names: &[String],
    params: &Hyperparameters,
) -> Result<(GbdtModel, TrainingTrace), GbdtError> {
    params.validate()?;
    let n_classes = class_names.len();
    if n_classes < 2 {
        return Err(GbdtError::TooFewClasses(n_classes));
    }
    if x.n_rows() != y.len() {
        return Err(GbdtError::DimensionMismatch(format!(
            "{} rows but {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if let Some((row, &label)) = y.iter().enumerate().find(|(_, &l)| l >= n_classes) {
        return Err(GbdtError::LabelOutOfRange { row, label, n_classes });
    }
    if y.iter().all(|&l| Some(&l) == y.first()) {
        return Err(GbdtError::SingleClass);
    }

    let objective = Objective::for_classes(n_classes);
    let n_out = objective.n_outputs(n_classes);
    let base_score = objective.base_score(y, n_classes);
    let binned = BinnedMatrix::build(x, params.histogram_bins);
    let mut learner = TreeLearner::new(&binned, params);

    let mut raw: Vec<Vec<f64>> = vec![base_score.clone(); y.len()];
    let mean_loss =
        |raw: &[Vec<f64>]| raw.iter().zip(y).map(|(r, &l)| objective.loss(r, l)).sum::<f64>() / y.len() as f64;
    let mut loss = vec![mean_loss(&raw)];
    let mut trees = Vec::with_capacity(params.num_rounds);
    let mut gains = vec![0.0; x.n_cols()];

    for _ in 0..params.num_rounds {
        let probs: Vec<Vec<f64>> = raw.iter().map(|r| objective.probabilities(r)).collect();
        let mut round = Vec::with_capacity(n_out);
        let mut updates: Vec<Vec<(usize, Vec<u32>, f64)>> = Vec::with_capacity(n_out);
        for k in 0..n_out {
            let stats: Vec<GradStats> = probs
                .iter()
                .zip(y)
                .map(|(p, &label)| {
                    let (g, h) = objective.grad_hess(p, label, k);
                    GradStats::of_row(g, h)
                })
                .collect();
            let grown = learner.grow(&stats);
            for &(feature, gain) in &grown.splits {
                gains[feature] += gain;
            }
            let leaf_updates = grown
                .leaves
                .into_iter()
                .map(|(node, rows)| {
                    let TreeNode::Leaf { value } = grown.nodes[node] else {
                        unreachable!("leaf rows point at leaves")
                    };
                    (k, rows, value)
                })
                .collect();
            updates.push(leaf_updates);
            round.push(Tree::from_arena(&grown.nodes));
        }
        for per_output in updates {
            for (k, rows, value) in per_output {
                for r in rows {
                    raw[r as usize][k] += value;
                }
            }
        }
        trees.push(round);
        loss.push(mean_loss(&raw));
    }

    let model = GbdtModel {
        objective,
        class_names: class_names.to_vec(),
        feature_dim: x.n_cols(),
        learning_rate: params.learning_rate,
        base_score,
        hyperparameters: params.clone(),
        trees,
        gain: GainReport { gains },
    };
    Ok((model, TrainingTrace { loss, raw_scores: raw }))
}

impl GbdtModel {
    /// A model with no trees, predicting from `base_score` alone.
    pub fn constant(class_names: Vec<String>, feature_dim: usize, base_score: Vec<f64>) -> Result<Self, GbdtError> {
        if class_names.len() < 2 {
            return Err(GbdtError::TooFewClasses(class_names.len()));
        }
        let params = Hyperparameters {
            num_rounds: 0,
            ..Hyperparameters::default()
        };
        let model = GbdtModel {
            objective: Objective::for_classes(class_names.len()),
            class_names,
            feature_dim,
            learning_rate: params.learning_rate,
            base_score,
            hyperparameters: params,
            trees: Vec::new(),
            gain: GainReport {
                gains: vec![0.0; feature_dim],
            },
        };
        model.validate()?;
        Ok(model)
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn base_score(&self) -> &[f64] {
        &self.base_score
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyperparameters
    }

    pub fn trees(&self) -> &[Vec<Tree>] {
        &self.trees
    }

    pub fn gain_report(&self) -> &GainReport {
        &self.gain
    }

    /// Checks structural invariants, e.g. after deserialization.
    pub fn validate(&self) -> Result<(), GbdtError> {
        let n_classes = self.class_names.len();
        match (self.objective, n_classes) {
            (Objective::BinaryLogistic, 2) => {}
            (Objective::MulticlassSoftmax, n) if n >= 3 => {}
            (obj, n) => {
                return Err(GbdtError::Malformed(format!("{obj:?} objective with {n} classes")));
            }
        }
        let n_out = self.objective.n_outputs(n_classes);
        if self.base_score.len() != n_out || self.base_score.iter().any(|b| !b.is_finite()) {
            return Err(GbdtError::Malformed("base score does not match objective".into()));
        }
        if self.gain.gains.len() != self.feature_dim || self.gain.gains.iter().any(|g| !(*g >= 0.0)) {
            return Err(GbdtError::Malformed(
                "gain ledger does not match feature dimension".into(),
            ));
        }
        for round in &self.trees {
            if round.len() != n_out {
                return Err(GbdtError::Malformed(format!(
                    "round has {} trees, expected {n_out}",
                    round.len()
                )));
            }
            for tree in round {
                tree.validate(self.feature_dim)?;
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &SparseVector) -> Result<(), GbdtError> {
        match x.max_index() {
            Some(index) if index >= self.feature_dim => Err(GbdtError::FeatureOutOfRange {
                index,
                dim: self.feature_dim,
            }),
            _ => Ok(()),
        }
    }

    pub fn predict_raw(&self, x: &SparseVector) -> Result<Vec<f64>, GbdtError> {
        self.check_input(x)?;
        let mut raw = self.base_score.clone();
        for round in &self.trees {
            for (k, tree) in round.iter().enumerate() {
                raw[k] += tree.predict(x);
            }
        }
        Ok(raw)
    }

    /// Class probabilities in `class_names` order.
    pub fn predict_scores(&self, x: &SparseVector) -> Result<Vec<f64>, GbdtError> {
        self.predict_raw(x).map(|r| self.objective.probabilities(&r))
    }

    pub fn predict_class_index(&self, x: &SparseVector) -> Result<usize, GbdtError> {
        self.predict_scores(x).map(|p| argmax(&p))
    }

    pub fn predict_class(&self, x: &SparseVector) -> Result<&str, GbdtError> {
        self.predict_class_index(x).map(|i| self.class_names[i].as_str())
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Features with positive total gain, highest first (ties by index), as
/// `(n-gram, gain)`.
pub fn gain_importance(model: &GbdtModel, space: &FeatureSpace, top_k: usize) -> Result<Vec<(String, f64)>, GbdtError> {
    if space.len() != model.feature_dim() {
        return Err(GbdtError::DimensionMismatch(format!(
            "feature space has {} features, model expects {}",
            space.len(),
            model.feature_dim()
        )));
    }
    let gains = &model.gain_report().gains;
    let mut ranked: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    ranked.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    Ok(ranked
        .into_iter()
        .take(top_k)
        .map(|i| (space.terms()[i].clone(), gains[i]))
        .collect())
}
