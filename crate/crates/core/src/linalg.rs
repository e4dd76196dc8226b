//! Sparse storage and the banded Cholesky factorization used by the solvers.
//!
//! Matrices produced by assembly are symmetric with a bandwidth bounded by the
//! node numbering of the structured mesh, so a dense band factorization is both
//! simple and fast for the problem sizes of interest (a few thousand dofs).

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|a| (a.0, a.1));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &sorted {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &triplets)
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

    /// Iterates the stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `x^T A x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entry of `|A - A^T|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.nrows {
            for (j, _) in self.row(i) {
                bw = bw.max(i.abs_diff(j));
            }
        }
        bw
    }

    /// Restriction to the rows and columns selected by `index_map`
    /// (`Some(new_index)` keeps, `None` drops).
    pub fn restrict(&self, index_map: &[Option<usize>], n_new: usize) -> CsrMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let Some(ni) = index_map[i] else { continue };
            for (j, v) in self.row(i) {
                if let Some(nj) = index_map[j] {
                    triplets.push((ni, nj, v));
                }
            }
        }
        CsrMatrix::from_triplets(n_new, n_new, &triplets)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        dense
    }

    /// Coordinate-triplet text, one `i j value` line per stored entry.
    pub fn to_triplet_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let _ = writeln!(out, "{i} {j} {v:e}");
            }
        }
        out
    }
}

/// Cholesky factor `L` of a symmetric positive definite band matrix, stored
/// row-wise as `L[i][i - bw ..= i]`.
#[derive(Clone, Debug)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandCholesky {
    /// Factors `A + diag(shift)` where rows/columns flagged in `pinned` are
    /// replaced by identity rows. `shift` and `pinned` may be empty.
    pub fn factor_modified(a: &CsrMatrix, shift: &[f64], pinned: &[bool]) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let bw = a.bandwidth();
        let width = bw + 1;
        let mut data = vec![0.0; n * width];
        let is_pinned = |i: usize| pinned.get(i).copied().unwrap_or(false);
        for i in 0..n {
            if is_pinned(i) {
                data[i * width + bw] = 1.0;
                continue;
            }
            for (j, v) in a.row(i) {
                if j <= i && !is_pinned(j) {
                    data[i * width + bw - (i - j)] += v;
                }
            }
            if let Some(s) = shift.get(i) {
                data[i * width + bw] += s;
            }
        }

        for i in 0..n {
            let j_lo = i.saturating_sub(bw);
            for j in j_lo..=i {
                let k_lo = j_lo.max(j.saturating_sub(bw));
                let mut sum = data[i * width + bw - (i - j)];
                for k in k_lo..j {
                    sum -= data[i * width + bw - (i - k)] * data[j * width + bw - (j - k)];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::NotPositiveDefinite {
                            pivot: i,
                            value: sum,
                        });
                    }
                    data[i * width + bw] = sum.sqrt();
                } else {
                    data[i * width + bw - (i - j)] = sum / data[j * width + bw];
                }
            }
        }
        Ok(BandCholesky { n, bw, data })
    }

    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        Self::factor_modified(a, &[], &[])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let (n, bw, width) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut sum = b[i];
            for k in i.saturating_sub(bw)..i {
                sum -= self.data[i * width + bw - (i - k)] * b[k];
            }
            b[i] = sum / self.data[i * width + bw];
        }
        for i in (0..n).rev() {
            let mut sum = b[i];
            for k in (i + 1)..(i + bw + 1).min(n) {
                sum -= self.data[k * width + bw - (k - i)] * b[k];
            }
            b[i] = sum / self.data[i * width + bw];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `sqrt(x^T M x)`, clamped at zero against round-off.
pub fn energy_norm(m: &CsrMatrix, x: &[f64]) -> f64 {
    m.quad_form(x).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.5), (1, 0, 3.5)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 3.5);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.asymmetry(), 0.0);
    }

    #[test]
    fn band_cholesky_solves_tridiagonal() {
        let a = tridiag(7);
        let x_true: Vec<f64> = (0..7).map(|i| (i as f64).sin() + 1.0).collect();
        let b = a.mul_vec(&x_true);
        let chol = BandCholesky::factor(&a).unwrap();
        let x = chol.solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn pinned_rows_become_identity() {
        let a = tridiag(4);
        let chol = BandCholesky::factor_modified(&a, &[0.0, 1.0, 0.0, 0.0], &[false, false, true, false])
            .unwrap();
        let x = chol.solve(&[1.0, 2.0, 3.0, 4.0]);
        // pinned row passes through, the rest decouples from it
        assert!((x[2] - 3.0).abs() < 1e-14);
        // remaining 3x3 system: [[4,-1,0],[-1,5,0],[0,0,4]]
        assert!((x[3] - 1.0).abs() < 1e-14);
        let det = 4.0 * 5.0 - 1.0;
        assert!((x[0] - (1.0 * 5.0 + 2.0) / det).abs() < 1e-14);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(
            BandCholesky::factor(&a),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
    }

    #[test]
    fn restriction_keeps_selected_block() {
        let a = tridiag(3);
        let r = a.restrict(&[Some(0), None, Some(1)], 2);
        assert_eq!(r.to_dense(), vec![vec![4.0, 0.0], vec![0.0, 4.0]]);
    }
}
