//! Sparse row vectors and a CSR matrix built from them.

use serde::{Deserialize, Serialize};

/// `(index, weight)` pairs, strictly increasing by index.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Sorts by index and sums duplicate indices. Explicit zeros are dropped.
    pub fn from_entries(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (idx, w) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == idx => last.1 += w,
                _ => merged.push((idx, w)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        SparseVector { entries: merged }
    }

    pub fn zero() -> Self {
        SparseVector::default()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|e| e.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut dense = vec![0.0; dim];
        for &(idx, w) in &self.entries {
            dense[idx] = w;
        }
        dense
    }
}

/// Compressed sparse rows with a fixed column count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(n_cols: usize) -> Self {
        SparseMatrix {
            n_cols,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Panics if a row has an index `>= n_cols`.
    pub fn from_rows<'a, I>(rows: I, n_cols: usize) -> Self
    where
        I: IntoIterator<Item = &'a SparseVector>,
    {
        let mut m = SparseMatrix::new(n_cols);
        for row in rows {
            m.push_row(row);
        }
        m
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut m = SparseMatrix::new(n_cols);
        for row in rows {
            assert_eq!(row.len(), n_cols, "ragged dense rows");
            let v = SparseVector::from_entries(row.iter().copied().enumerate().collect());
            m.push_row(&v);
        }
        m
    }

    pub fn push_row(&mut self, row: &SparseVector) {
        if let Some(max) = row.max_index() {
            assert!(
                max < self.n_cols,
                "column {max} out of range for {} columns",
                self.n_cols
            );
        }
        for &(idx, w) in row.entries() {
            self.indices.push(idx);
            self.values.push(w);
        }
        self.indptr.push(self.indices.len());
    }

    pub fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    pub fn row_vector(&self, i: usize) -> SparseVector {
        let (idx, vals) = self.row(i);
        SparseVector {
            entries: idx.iter().copied().zip(vals.iter().copied()).collect(),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = SparseVector> + '_ {
        (0..self.n_rows()).map(|i| self.row_vector(i))
    }
}
