//! Compressed-row sparse real matrices.

use nalgebra::DMatrix;
use rayon::prelude::*;

/// Rows below this count are multiplied serially.
const PAR_THRESHOLD: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from per-row (column, value) lists. Duplicate columns are
    /// summed and exact zeros dropped.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let col = row[k].0;
                assert!(col < ncols, "column {col} out of range");
                let mut v = 0.0;
                while k < row.len() && row[k].0 == col {
                    v += row[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    indices.push(col);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    /// Builds from (row, column, value) triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            rows[r].push((c, v));
        }
        Self::from_rows(ncols, rows)
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows = (0..m.nrows())
            .map(|r| {
                (0..m.ncols())
                    .filter(|&c| m[(r, c)] != 0.0)
                    .map(|c| (c, m[(r, c)]))
                    .collect()
            })
            .collect();
        Self::from_rows(m.ncols(), rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |k| vals[k])
    }

    /// Iterates (row, column, value) in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    #[inline]
    fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(r);
        cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        if self.nrows >= PAR_THRESHOLD {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(r, out)| *out = self.row_dot(r, x));
        } else {
            for (r, out) in y.iter_mut().enumerate() {
                *out = self.row_dot(r, x);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut rows = vec![Vec::new(); self.ncols];
        for (r, c, v) in self.triplets() {
            rows[c].push((r, v));
        }
        CsrMatrix::from_rows(self.nrows, rows)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// max |A + Aᵀ| over all entries.
    pub fn antisymmetry_error(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v + self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    /// Submatrix with the given rows and columns (in the given order).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_pos = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_pos[c] = k;
        }
        let out_rows = rows
            .iter()
            .map(|&r| {
                let (cs, vs) = self.row(r);
                cs.iter()
                    .zip(vs)
                    .filter(|(&c, _)| col_pos[c] != usize::MAX)
                    .map(|(&c, &v)| (col_pos[c], v))
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(cols.len(), out_rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_and_drop_zeros() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 2, 2.0), (1, 0, 1.0), (1, 0, -1.0)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 2), 3.0);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn matvec_matches_dense() {
        let d = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, -2.0, -1.0, 0.0, 0.5, 2.0, -0.5, 0.0]);
        let m = CsrMatrix::from_dense(&d);
        let x = [1.0, 2.0, 3.0];
        let y = m.mul_vec(&x);
        let yd = &d * nalgebra::DVector::from_column_slice(&x);
        for k in 0..3 {
            assert!((y[k] - yd[k]).abs() < 1e-15);
        }
        assert_eq!(m.antisymmetry_error(), 0.0);
        assert_eq!(m.transpose().to_dense(), d.transpose());
        assert_eq!(m.norm_inf(), 3.0);
    }

    #[test]
    fn parallel_path_matches_serial() {
        let n = PAR_THRESHOLD + 7;
        let rows = (0..n)
            .map(|r| vec![(r, 1.0 + r as f64), ((r * 7 + 3) % n, -0.5)])
            .collect();
        let m = CsrMatrix::from_rows(n, rows);
        let x: Vec<f64> = (0..n).map(|k| (k as f64).sin()).collect();
        let y = m.mul_vec(&x);
        for r in (0..n).step_by(97) {
            assert!((y[r] - m.row_dot(r, &x)).abs() < 1e-12);
        }
    }

    #[test]
    fn select_submatrix() {
        let d = DMatrix::from_fn(4, 4, |r, c| (r * 4 + c) as f64);
        let s = CsrMatrix::from_dense(&d).select(&[3, 1], &[0, 2]);
        assert_eq!(s.to_dense(), DMatrix::from_row_slice(2, 2, &[12.0, 14.0, 4.0, 6.0]));
    }
}
