//! Per-feature quantile bins over nonzero values.
//!
//! Bin 0 is reserved for zero (absent) entries. Nonzero values map to bins
//! `1..=n_bins()` in ascending value order; each bin covers a contiguous run
//! of distinct training values.

use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct FeatureBins {
    /// Smallest training value in each nonzero bin.
    lower: Vec<f64>,
    /// Largest training value in each nonzero bin.
    upper: Vec<f64>,
}

impl FeatureBins {
    /// `values` are the nonzero entries of one column, in any order.
    pub(crate) fn from_values(mut values: Vec<f64>, max_bins: usize) -> Self {
        debug_assert!(max_bins >= 1);
        values.sort_by(f64::total_cmp);
        let mut distinct: Vec<(f64, usize)> = Vec::new();
        for v in values {
            match distinct.last_mut() {
                Some(last) if last.0 == v => last.1 += 1,
                _ => distinct.push((v, 1)),
            }
        }
        let mut bins = FeatureBins::default();
        if distinct.len() <= max_bins {
            for &(v, _) in &distinct {
                bins.lower.push(v);
                bins.upper.push(v);
            }
            return bins;
        }

        // Greedy equal-count cuts at distinct-value boundaries.
        let total: usize = distinct.iter().map(|d| d.1).sum();
        let mut cum = 0usize;
        let mut open: Option<f64> = None;
        for (i, &(v, c)) in distinct.iter().enumerate() {
            let lo = *open.get_or_insert(v);
            cum += c;
            let remaining_values = distinct.len() - i - 1;
            let remaining_bins = max_bins - bins.upper.len() - 1;
            let target_reached = cum * max_bins >= (bins.upper.len() + 1) * total;
            let must_close = remaining_values == remaining_bins;
            let last = remaining_values == 0;
            if last || (remaining_bins > 0 && (target_reached || must_close)) {
                bins.lower.push(lo);
                bins.upper.push(v);
                open = None;
            }
        }
        bins
    }

    pub(crate) fn n_bins(&self) -> usize {
        self.upper.len()
    }

    /// 1-based bin of a nonzero value.
    pub(crate) fn bin_of(&self, v: f64) -> usize {
        let pos = self.upper.partition_point(|&u| u < v);
        pos.min(self.upper.len().saturating_sub(1)) + 1
    }

    /// Threshold sending nonzero bins `1..=k` left and the rest right, or
    /// `None` when no representable threshold exists.
    pub(crate) fn threshold_after(&self, k: usize) -> Option<f64> {
        let n = self.n_bins();
        if n == 0 {
            return None;
        }
        if k == n {
            return Some(self.upper[n - 1]);
        }
        if k == 0 {
            let min = self.lower[0];
            if min > 0.0 {
                return Some(0.0);
            }
            let t = min - 1.0;
            return (t < min).then_some(t);
        }
        let (a, b) = (self.upper[k - 1], self.lower[k]);
        let mid = (a + b) / 2.0;
        Some(if mid >= a && mid < b { mid } else { a })
    }
}

/// Column bins plus the matrix re-encoded as `(feature, bin)` per nonzero.
#[derive(Debug)]
pub(crate) struct BinnedMatrix {
    pub(crate) bins: Vec<FeatureBins>,
    /// Offset of each feature's first nonzero bin in a flat histogram.
    pub(crate) offsets: Vec<usize>,
    pub(crate) total_bins: usize,
    indptr: Vec<usize>,
    entries: Vec<(u32, u32)>,
}

impl BinnedMatrix {
    pub(crate) fn build(x: &SparseMatrix, max_bins: usize) -> Self {
        let n_cols = x.n_cols();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); n_cols];
        for i in 0..x.n_rows() {
            let (idx, vals) = x.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                if v != 0.0 {
                    columns[j].push(v);
                }
            }
        }
        let bins: Vec<FeatureBins> = columns
            .into_iter()
            .map(|c| FeatureBins::from_values(c, max_bins))
            .collect();
        let mut offsets = Vec::with_capacity(n_cols);
        let mut total_bins = 0;
        for b in &bins {
            offsets.push(total_bins);
            total_bins += b.n_bins();
        }

        let mut indptr = vec![0];
        let mut entries = Vec::with_capacity(x.nnz());
        for i in 0..x.n_rows() {
            let (idx, vals) = x.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                if v != 0.0 {
                    entries.push((j as u32, bins[j].bin_of(v) as u32));
                }
            }
            indptr.push(entries.len());
        }
        BinnedMatrix {
            bins,
            offsets,
            total_bins,
            indptr,
            entries,
        }
    }

    pub(crate) fn row(&self, i: usize) -> &[(u32, u32)] {
        &self.entries[self.indptr[i]..self.indptr[i + 1]]
    }

    /// Bin of `feature` in row `i`; 0 when the entry is zero.
    pub(crate) fn bin(&self, i: usize, feature: usize) -> usize {
        let row = self.row(i);
        row.binary_search_by_key(&(feature as u32), |e| e.0)
            .map(|p| row[p].1 as usize)
            .unwrap_or(0)
    }
}
