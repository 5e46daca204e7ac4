//! Dense helpers on top of nalgebra plus a small CSR matrix used for graphs.
//!
//! Matrices are nalgebra throughout; the two cubic kernels (symmetric
//! eigendecomposition and SPD solves) are delegated to faer's blocked routines.

use faer::linalg::solvers::Solve;
use faer::Side;
use nalgebra::{DMatrix, DVector};

use crate::error::{HmvcError, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Compressed sparse row matrix with `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from triplets. Duplicate coordinates are merged with `combine`.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
        combine: impl Fn(f64, f64) -> f64,
    ) -> Self {
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, w) in triplets {
            debug_assert!(i < n_rows && j < n_cols);
            if last == Some((i, j)) {
                let v = values.last_mut().expect("merged entry exists");
                *v = combine(*v, w);
                continue;
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(w);
            last = Some((i, j));
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates the stored `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| self.row(i).map(move |(j, w)| (i, j, w)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.row(i).map(|(_, w)| w).sum()).collect()
    }

    /// Returns `diag(left) * self * diag(right)`.
    pub fn scale(&self, left: &[f64], right: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for i in 0..self.n_rows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[p] *= left[i] * right[self.col_idx[p]];
            }
        }
        out
    }

    /// Sparse times dense.
    pub fn mul_dense(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.n_cols, rhs.nrows(), "csr * dense shape mismatch");
        let mut out = Mat::zeros(self.n_rows, rhs.ncols());
        for c in 0..rhs.ncols() {
            let col = rhs.column(c);
            for i in 0..self.n_rows {
                let mut acc = 0.0;
                for (j, w) in self.row(i) {
                    acc += w * col[j];
                }
                out[(i, c)] = acc;
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| self.row(i).map(|(j, w)| w * x[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Mat {
        let mut out = Mat::zeros(self.n_rows, self.n_cols);
        for (i, j, w) in self.triplets() {
            out[(i, j)] = w;
        }
        out
    }
}

fn to_faer(m: &Mat) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> Mat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
///
/// Only the lower triangle of `m` is read.
pub fn sym_eigen_desc(m: &Mat) -> (Vector, Mat) {
    let n = m.nrows();
    if n == 0 {
        return (Vector::zeros(0), Mat::zeros(0, 0));
    }
    let eig = to_faer(m)
        .self_adjoint_eigen(Side::Lower)
        .expect("symmetric eigendecomposition of a finite matrix");
    // faer sorts ascending
    let values = Vector::from_iterator(n, (0..n).rev().map(|i| eig.S()[i]));
    let u = eig.U();
    let vectors = Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    (values, vectors)
}

/// Solves `(a + shift * I) x = rhs` for symmetric positive definite `a + shift * I`.
pub fn solve_spd_shifted(a: &Mat, shift: f64, rhs: &Mat) -> Result<Mat> {
    let mut lhs = to_faer(a);
    for i in 0..a.nrows() {
        lhs[(i, i)] += shift;
    }
    let llt = lhs
        .llt(Side::Lower)
        .map_err(|_| HmvcError::SolveFailure("matrix is not positive definite".into()))?;
    let x = from_faer(llt.solve(to_faer(rhs)).as_ref());
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(HmvcError::SolveFailure("non-finite solution".into()))
    }
}

/// Squared Frobenius norm.
pub fn frob2(m: &Mat) -> f64 {
    m.iter().map(|v| v * v).sum()
}

/// Max-norm of `a - b`.
pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `Tr(aᵀ b)`, i.e. the Frobenius inner product.
pub fn frob_inner(a: &Mat, b: &Mat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}
