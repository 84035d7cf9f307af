//! Leaf-wise histogram tree growth.
//!
//! Gradient statistics are accumulated as fixed-point integers with
//! `FRAC_BITS` fractional bits. Integer addition is associative, so a
//! histogram, a leaf total or a parent-minus-sibling difference has the same
//! value no matter how rows are ordered or partitioned, and converting back
//! to `f64` yields the correctly rounded sum for any gradient of magnitude at
//! least `2^(52 - FRAC_BITS)`.

use std::ops::{Add, AddAssign, Sub};

use rayon::prelude::*;

use super::binning::BinnedMatrix;
use super::{Hyperparameters, TreeNode};

const FRAC_BITS: i32 = 90;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct GradStats {
    grad: i128,
    hess: i128,
    count: u32,
}

impl GradStats {
    pub(crate) fn of_row(grad: f64, hess: f64) -> Self {
        GradStats {
            grad: to_fixed(grad),
            hess: to_fixed(hess),
            count: 1,
        }
    }

    pub(crate) fn grad(&self) -> f64 {
        from_fixed(self.grad)
    }

    pub(crate) fn hess(&self) -> f64 {
        from_fixed(self.hess)
    }

    pub(crate) fn count(&self) -> usize {
        self.count as usize
    }
}

impl Add for GradStats {
    type Output = GradStats;
    fn add(self, o: GradStats) -> GradStats {
        GradStats {
            grad: self.grad + o.grad,
            hess: self.hess + o.hess,
            count: self.count + o.count,
        }
    }
}

impl AddAssign for GradStats {
    fn add_assign(&mut self, o: GradStats) {
        *self = *self + o;
    }
}

impl Sub for GradStats {
    type Output = GradStats;
    fn sub(self, o: GradStats) -> GradStats {
        GradStats {
            grad: self.grad - o.grad,
            hess: self.hess - o.hess,
            count: self.count - o.count,
        }
    }
}

fn to_fixed(v: f64) -> i128 {
    (v * 2f64.powi(FRAC_BITS)) as i128
}

fn from_fixed(x: i128) -> f64 {
    x as f64 / 2f64.powi(FRAC_BITS)
}

/// `G^2 / (H + lambda)`.
pub(crate) fn score_term(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

pub(crate) fn split_gain(left: &GradStats, right: &GradStats, parent: &GradStats, lambda: f64) -> f64 {
    score_term(left.grad(), left.hess(), lambda) + score_term(right.grad(), right.hess(), lambda)
        - score_term(parent.grad(), parent.hess(), lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SplitCandidate {
    pub(crate) feature: usize,
    /// Nonzero bins `1..=left_bins` go left.
    pub(crate) left_bins: usize,
    pub(crate) threshold: f64,
    pub(crate) default_left: bool,
    pub(crate) gain: f64,
    pub(crate) left: GradStats,
}

/// Best split of one feature given its nonzero-bin histogram. Candidates are
/// visited by ascending threshold, zeros-left before zeros-right; only a
/// strictly larger gain replaces the incumbent.
pub(crate) fn best_split_for_feature(
    feature: usize,
    hist: &[GradStats],
    total: &GradStats,
    binned: &BinnedMatrix,
    params: &Hyperparameters,
) -> Option<SplitCandidate> {
    let bins = &binned.bins[feature];
    let nonzero = hist.iter().fold(GradStats::default(), |acc, s| acc + *s);
    let zero = *total - nonzero;
    let min_rows = params.min_samples_per_leaf;
    let mut best: Option<SplitCandidate> = None;
    let mut prefix = GradStats::default();
    for k in 0..=hist.len() {
        if k > 0 {
            prefix += hist[k - 1];
        }
        let Some(threshold) = bins.threshold_after(k) else {
            continue;
        };
        for default_left in [true, false] {
            let left = if default_left { prefix + zero } else { prefix };
            let right = *total - left;
            if left.count() < min_rows || right.count() < min_rows {
                continue;
            }
            let gain = split_gain(&left, &right, total, params.lambda_l2);
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(SplitCandidate {
                    feature,
                    left_bins: k,
                    threshold,
                    default_left,
                    gain,
                    left,
                });
            }
        }
    }
    best
}

/// Reusable per-tree scratch: a flat histogram and feature touch marks.
pub(crate) struct TreeLearner<'a> {
    binned: &'a BinnedMatrix,
    params: &'a Hyperparameters,
    hist: Vec<GradStats>,
    touched: Vec<bool>,
}

struct Leaf {
    rows: Vec<u32>,
    total: GradStats,
    best: Option<SplitCandidate>,
    node: usize,
}

/// A grown tree in arena form plus the row sets of its leaves.
pub(crate) struct GrownTree {
    pub(crate) nodes: Vec<TreeNode>,
    /// `(node index, rows)` for every leaf.
    pub(crate) leaves: Vec<(usize, Vec<u32>)>,
    /// `(feature, gain)` of accepted splits in acceptance order.
    pub(crate) splits: Vec<(usize, f64)>,
}

impl<'a> TreeLearner<'a> {
    pub(crate) fn new(binned: &'a BinnedMatrix, params: &'a Hyperparameters) -> Self {
        TreeLearner {
            binned,
            params,
            hist: vec![GradStats::default(); binned.total_bins],
            touched: vec![false; binned.bins.len()],
        }
    }

    fn find_best(&mut self, rows: &[u32], total: &GradStats, row_stats: &[GradStats]) -> Option<SplitCandidate> {
        let binned = self.binned;
        let mut features = Vec::new();
        for &r in rows {
            let s = row_stats[r as usize];
            for &(f, b) in binned.row(r as usize) {
                let f = f as usize;
                self.hist[binned.offsets[f] + b as usize - 1] += s;
                if !self.touched[f] {
                    self.touched[f] = true;
                    features.push(f);
                }
            }
        }
        features.sort_unstable();

        let hist = &self.hist;
        let params = self.params;
        let per_feature: Vec<Option<SplitCandidate>> = features
            .par_iter()
            .map(|&f| {
                let lo = binned.offsets[f];
                let hi = lo + binned.bins[f].n_bins();
                best_split_for_feature(f, &hist[lo..hi], total, binned, params)
            })
            .collect();

        for &f in &features {
            let lo = binned.offsets[f];
            self.hist[lo..lo + binned.bins[f].n_bins()].fill(GradStats::default());
            self.touched[f] = false;
        }

        let mut best: Option<SplitCandidate> = None;
        for cand in per_feature.into_iter().flatten() {
            if best.as_ref().is_none_or(|b| cand.gain > b.gain) {
                best = Some(cand);
            }
        }
        let min_gain = params.min_gain_to_split.max(0.0);
        best.filter(|b| b.gain > min_gain)
    }

    pub(crate) fn grow(&mut self, row_stats: &[GradStats]) -> GrownTree {
        let rows: Vec<u32> = (0..row_stats.len() as u32).collect();
        let total = row_stats.iter().fold(GradStats::default(), |acc, s| acc + *s);
        let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
        let best = self.find_best(&rows, &total, row_stats);
        let mut leaves = vec![Leaf {
            rows,
            total,
            best,
            node: 0,
        }];
        let mut splits = Vec::new();

        while leaves.len() < self.params.max_leaves {
            let mut pick: Option<(usize, f64)> = None;
            for (i, leaf) in leaves.iter().enumerate() {
                if let Some(b) = &leaf.best {
                    if pick.is_none_or(|(_, g)| b.gain > g) {
                        pick = Some((i, b.gain));
                    }
                }
            }
            let Some((i, _)) = pick else { break };
            let leaf = leaves.remove(i);
            let split = leaf.best.expect("picked leaves have a split");

            let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
                leaf.rows
                    .iter()
                    .partition(|&&r| match self.binned.bin(r as usize, split.feature) {
                        0 => split.default_left,
                        b => b <= split.left_bins,
                    });
            let left_total = split.left;
            let right_total = leaf.total - split.left;
            debug_assert_eq!(left_rows.len(), left_total.count());
            debug_assert_eq!(right_rows.len(), right_total.count());

            let left_node = nodes.len();
            nodes.push(TreeNode::Leaf { value: 0.0 });
            nodes.push(TreeNode::Leaf { value: 0.0 });
            nodes[leaf.node] = TreeNode::Split {
                feature: split.feature,
                threshold: split.threshold,
                default_left: split.default_left,
                left: left_node,
                right: left_node + 1,
                gain: split.gain,
            };
            splits.push((split.feature, split.gain));

            let left_best = self.find_best(&left_rows, &left_total, row_stats);
            let right_best = self.find_best(&right_rows, &right_total, row_stats);
            leaves.push(Leaf {
                rows: left_rows,
                total: left_total,
                best: left_best,
                node: left_node,
            });
            leaves.push(Leaf {
                rows: right_rows,
                total: right_total,
                best: right_best,
                node: left_node + 1,
            });
        }

        let lr = self.params.learning_rate;
        let lambda = self.params.lambda_l2;
        let mut out_leaves = Vec::with_capacity(leaves.len());
        for leaf in leaves {
            let value = -lr * leaf.total.grad() / (leaf.total.hess() + lambda);
            nodes[leaf.node] = TreeNode::Leaf { value };
            out_leaves.push((leaf.node, leaf.rows));
        }
        GrownTree {
            nodes,
            leaves: out_leaves,
            splits,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_is_exact_for_dyadic_values() {
        let s = GradStats::of_row(0.375, 0.25) + GradStats::of_row(-1.0, 0.125);
        assert_eq!(s.grad(), -0.625);
        assert_eq!(s.hess(), 0.375);
        assert_eq!(s.count(), 2);
    }

    #[test]
    fn fixed_point_sum_is_order_independent() {
        let vals = [0.1, 0.7, -0.3333, 1e-9, -0.95, 0.2];
        let fwd = vals
            .iter()
            .fold(GradStats::default(), |a, &v| a + GradStats::of_row(v, v.abs()));
        let rev = vals
            .iter()
            .rev()
            .fold(GradStats::default(), |a, &v| a + GradStats::of_row(v, v.abs()));
        assert_eq!(fwd, rev);
        let split = GradStats::of_row(0.1, 0.1) + GradStats::of_row(0.7, 0.7);
        assert_eq!((fwd - split) + split, fwd);
    }

    #[test]
    fn single_value_round_trips() {
        for v in [0.3, -0.7, 1.0 / 3.0, 0.015625, 1e-11] {
            assert_eq!(GradStats::of_row(v, 0.0).grad(), v);
        }
    }
}
