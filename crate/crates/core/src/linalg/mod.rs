//! Sparse and dense linear algebra kernels used by the solver.
//!
//! The constraint matrix and its blocks live in [`SparseMatrix`] (compressed
//! row storage). Normal matrices and every reduced system are stored as
//! packed lower-triangular [`DenseSymMatrix`] values and factored with a plain
//! (unpivoted) Cholesky decomposition.

mod dense;
mod sparse;

pub use dense::{
    cholesky, cholesky_skipping, solve_cholesky, CholeskyFactor, DenseSymMatrix, PIVOT_FLOOR,
    SKIPPED_PIVOT,
};
pub(crate) use sparse::{accumulate_gram_of_transpose, gram_of_transpose};
pub use sparse::{weighted_gram, SparseMatrix};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("entry ({row}, {col}) outside a {n_rows}x{n_cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("cannot solve with a failed Cholesky factor")]
    FactorFailed,
}

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four independent accumulators; the summation order is fixed so results
    // stay bit-reproducible.
    let n = a.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let k = 4 * c;
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..n {
        tail += a[k] * b[k];
    }
    (s0 + s1) + (s2 + s3) + tail
}
