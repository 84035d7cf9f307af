//! Log-loss objectives: gradients, hessians, priors and link functions.

use serde::{Deserialize, Serialize};

const PRIOR_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// One raw score per row; `P(class 1) = sigmoid(score)`.
    BinaryLogistic,
    /// One raw score per class, softmax link.
    MulticlassSoftmax,
}

impl Objective {
    pub fn for_classes(n_classes: usize) -> Self {
        if n_classes == 2 {
            Objective::BinaryLogistic
        } else {
            Objective::MulticlassSoftmax
        }
    }

    /// Raw scores (and trees) per boosting round.
    pub fn n_outputs(self, n_classes: usize) -> usize {
        match self {
            Objective::BinaryLogistic => 1,
            Objective::MulticlassSoftmax => n_classes,
        }
    }

    /// Prior log-odds (binary) or log-priors (multiclass) from label counts.
    pub(crate) fn base_score(self, labels: &[usize], n_classes: usize) -> Vec<f64> {
        let mut counts = vec![0usize; n_classes];
        for &y in labels {
            counts[y] += 1;
        }
        let n = labels.len() as f64;
        match self {
            Objective::BinaryLogistic => {
                let p = (counts[1] as f64 / n).clamp(PRIOR_FLOOR, 1.0 - PRIOR_FLOOR);
                vec![(p / (1.0 - p)).ln()]
            }
            Objective::MulticlassSoftmax => counts.iter().map(|&c| (c as f64 / n).max(PRIOR_FLOOR).ln()).collect(),
        }
    }

    /// Maps raw scores to class probabilities.
    pub fn probabilities(self, raw: &[f64]) -> Vec<f64> {
        match self {
            Objective::BinaryLogistic => {
                let p = sigmoid(raw[0]);
                vec![1.0 - p, p]
            }
            Objective::MulticlassSoftmax => softmax(raw),
        }
    }

    /// Gradient and hessian of output `k` for one row, given the row's
    /// current class probabilities.
    pub(crate) fn grad_hess(self, probs: &[f64], label: usize, k: usize) -> (f64, f64) {
        let (p, is_target) = match self {
            Objective::BinaryLogistic => (probs[1], label == 1),
            Objective::MulticlassSoftmax => (probs[k], label == k),
        };
        let y = if is_target { 1.0 } else { 0.0 };
        (p - y, p * (1.0 - p))
    }

    /// Negative log-likelihood of one row.
    pub fn loss(self, raw: &[f64], label: usize) -> f64 {
        match self {
            Objective::BinaryLogistic => {
                let s = raw[0];
                // -ln sigmoid(z) = ln(1 + e^-z)
                let z = if label == 1 { s } else { -s };
                softplus(-z)
            }
            Objective::MulticlassSoftmax => log_sum_exp(raw) - raw[label],
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn softmax(raw: &[f64]) -> Vec<f64> {
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = raw.iter().map(|&r| (r - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_sum_exp(raw: &[f64]) -> f64 {
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + raw.iter().map(|&r| (r - max).exp()).sum::<f64>().ln()
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_binary_prior_is_zero() {
        let base = Objective::BinaryLogistic.base_score(&[0, 1, 0, 1], 2);
        assert_eq!(base, vec![0.0]);
        assert_eq!(Objective::BinaryLogistic.probabilities(&base), vec![0.5, 0.5]);
    }

    #[test]
    fn multiclass_prior_reproduces_frequencies() {
        let base = Objective::MulticlassSoftmax.base_score(&[0, 0, 1, 2], 3);
        let p = Objective::MulticlassSoftmax.probabilities(&base);
        for (got, want) in p.iter().zip([0.5, 0.25, 0.25]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let eps = 1e-6;
        for obj in [Objective::BinaryLogistic, Objective::MulticlassSoftmax] {
            let raw: Vec<f64> = match obj {
                Objective::BinaryLogistic => vec![0.3],
                Objective::MulticlassSoftmax => vec![0.3, -1.2, 0.7],
            };
            for label in 0..obj.n_outputs(3).max(2) {
                for k in 0..raw.len() {
                    let (g, h) = obj.grad_hess(&obj.probabilities(&raw), label, k);
                    let at = |d: f64| {
                        let mut r = raw.clone();
                        r[k] += d;
                        r
                    };
                    let fd_g = (obj.loss(&at(eps), label) - obj.loss(&at(-eps), label)) / (2.0 * eps);
                    let fd_h = (obj.loss(&at(eps), label) - 2.0 * obj.loss(&raw, label) + obj.loss(&at(-eps), label))
                        / (eps * eps);
                    assert!((g - fd_g).abs() < 1e-6, "{obj:?} grad {g} vs {fd_g}");
                    assert!((h - fd_h).abs() < 1e-3, "{obj:?} hess {h} vs {fd_h}");
                }
            }
        }
    }

    #[test]
    fn loss_is_stable_for_extreme_scores() {
        assert!(Objective::BinaryLogistic.loss(&[800.0], 1) < 1e-300);
        assert!((Objective::BinaryLogistic.loss(&[800.0], 0) - 800.0).abs() < 1e-9);
        let l = Objective::MulticlassSoftmax.loss(&[1000.0, 0.0, -1000.0], 2);
        assert!((l - 2000.0).abs() < 1e-9);
    }
}
