//! Compressed sparse row matrices.

use crate::error::{Error, Result};

/// Row-compressed matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

/// Unordered `(row, col, value)` entries; duplicates are summed on
/// conversion.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    /// Append `scale * block` with its top-left corner at `(row0, col0)`.
    pub fn add_block(&mut self, block: &CsrMatrix, row0: usize, col0: usize, scale: f64) {
        if scale == 0.0 {
            return;
        }
        for r in 0..block.nrows {
            for k in block.row_ptr[r]..block.row_ptr[r + 1] {
                self.entries
                    .push((row0 + r, col0 + block.col_idx[k], scale * block.values[k]));
            }
        }
    }

    /// Append `scale * block^T` with its top-left corner at `(row0, col0)`.
    pub fn add_block_transposed(&mut self, block: &CsrMatrix, row0: usize, col0: usize, scale: f64) {
        for r in 0..block.nrows {
            for k in block.row_ptr[r]..block.row_ptr[r + 1] {
                self.entries
                    .push((row0 + block.col_idx[k], col0 + r, scale * block.values[k]));
            }
        }
    }

    pub fn into_csr(self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.nrows, self.ncols, self.entries)
    }
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Sort and merge. The summation order of duplicates follows their
    /// order in `entries`, so equal input gives bit-identical output.
    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut entries = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, entries)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |k| self.values[k])
    }

    /// Index into `values` of the stored entry `(r, c)`.
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let cols = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        cols.binary_search(&c).ok().map(|k| self.row_ptr[r] + k)
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without dimension checks beyond debug assertions.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yr = s;
        }
    }

    /// `y = A^T x`.
    pub fn spmv_transposed(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k]] += self.values[k] * xr;
            }
        }
        Ok(y)
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for (r, &xr) in x.iter().enumerate().take(self.nrows) {
            if xr == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += self.values[k] * y[self.col_idx[k]];
            }
            s += xr * row;
        }
        s
    }

    pub fn quadratic(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                entries.push((c, r, v));
            }
        }
        Self::from_triplets(self.ncols, self.nrows, entries)
    }

    /// `sum_i scale_i * A_i`, all operands of equal shape.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> Self {
        let (nrows, ncols) = terms.first().map_or((0, 0), |(_, m)| (m.nrows, m.ncols));
        let mut t = Triplets::new(nrows, ncols);
        for (s, m) in terms {
            assert_eq!((m.nrows, m.ncols), (nrows, ncols));
            t.add_block(m, 0, 0, *s);
        }
        t.into_csr()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                d[r][c] = v;
            }
        }
        d
    }

    /// Largest `|A_ij - A_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut m: f64 = 0.0;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m = m.max((v - t.get(r, c)).abs());
            }
            for (c, v) in t.row(r) {
                m = m.max((v - self.get(r, c)).abs());
            }
        }
        m
    }

    /// Largest `|A_ij + A_ji|`.
    pub fn skew_defect(&self) -> f64 {
        let t = self.transpose();
        let mut m: f64 = 0.0;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m = m.max((v + t.get(r, c)).abs());
            }
        }
        m
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spmv_examples() {
        let x = vec![1.0, -2.0, 3.5];
        assert_eq!(CsrMatrix::identity(3).spmv(&x).unwrap(), x);
        assert_eq!(CsrMatrix::zeros(3, 3).spmv(&x).unwrap(), vec![0.0; 3]);
        let a = CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![0.0, 3.0]]);
        assert_eq!(a.spmv(&[1.0, 1.0]).unwrap(), vec![3.0, 3.0]);
    }

    #[test]
    fn spmv_dimension_mismatch() {
        let a = CsrMatrix::identity(3);
        assert!(matches!(
            a.spmv(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let a = CsrMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 1, 2.0), (1, 0, 4.0), (1, 2, 0.5)]);
        assert_eq!(a.row_ptr, vec![0, 1, 3]);
        assert_eq!(a.col_idx, vec![1, 0, 2]);
        assert_eq!(a.values, vec![2.0, 4.0, 1.5]);
    }

    proptest! {
        #[test]
        fn matches_dense_product(
            entries in prop::collection::vec((0usize..6, 0usize..5, -10i32..10), 0..40),
            x in prop::collection::vec(-5i32..5, 5),
        ) {
            let trip: Vec<_> = entries.iter().map(|&(r, c, v)| (r, c, v as f64)).collect();
            let a = CsrMatrix::from_triplets(6, 5, trip.clone());
            let mut dense = vec![vec![0.0; 5]; 6];
            for (r, c, v) in trip { dense[r][c] += v; }
            let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let y = a.spmv(&xf).unwrap();
            for r in 0..6 {
                let e: f64 = (0..5).map(|c| dense[r][c] * xf[c]).sum();
                prop_assert_eq!(y[r], e);
            }
            prop_assert!(a.row_ptr.windows(2).all(|w| w[0] <= w[1]));
            for r in 0..6 {
                let cols: Vec<usize> = a.row(r).map(|(c, _)| c).collect();
                prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
            }
            let yt = a.transpose().spmv(&[1.0; 6]).unwrap();
            prop_assert_eq!(yt, a.spmv_transposed(&[1.0; 6]).unwrap());
        }
    }
}
