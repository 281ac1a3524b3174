use serde::{Deserialize, Serialize};

use super::IpmError;
use crate::linalg::{cholesky, cholesky_skipping, gram_of_transpose, CholeskyFactor, SparseMatrix};

/// Which normal-equation solver produced a direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Full,
    Reduced,
}

/// Solver for `(A W Aᵀ + reg·I) Δy = r` with a fixed `A` and varying `W`.
pub trait NormalEquations: Send {
    fn kind(&self) -> BackendKind;

    /// Dimension of the dense system actually factored.
    fn factored_dim(&self) -> usize;

    fn factor(&mut self, w: &[f64], reg: f64) -> Result<(), IpmError>;

    fn solve(&self, r: &[f64]) -> Result<Vec<f64>, IpmError>;

    /// When on, pivots below the floor of the final dense factorization are
    /// skipped instead of failing.
    fn set_skip_tiny_pivots(&mut self, on: bool);
}

/// Dense Cholesky of the whole normal matrix.
pub struct FullNormal {
    at: SparseMatrix,
    factor: Option<CholeskyFactor>,
    skip: bool,
}

impl FullNormal {
    pub fn new(a: &SparseMatrix) -> Self {
        FullNormal {
            at: a.transpose(),
            factor: None,
            skip: false,
        }
    }
}

impl NormalEquations for FullNormal {
    fn kind(&self) -> BackendKind {
        BackendKind::Full
    }

    fn factored_dim(&self) -> usize {
        self.at.n_cols()
    }

    fn factor(&mut self, w: &[f64], reg: f64) -> Result<(), IpmError> {
        let n = gram_of_transpose(&self.at, w);
        let f = if self.skip {
            cholesky_skipping(&n, reg).0
        } else {
            cholesky(&n, reg)
        };
        let ok = f.check();
        self.factor = Some(f);
        ok.map_err(IpmError::from)
    }

    fn solve(&self, r: &[f64]) -> Result<Vec<f64>, IpmError> {
        let f = self.factor.as_ref().ok_or(IpmError::NotFactored)?;
        Ok(crate::linalg::solve_cholesky(f, r)?)
    }

    fn set_skip_tiny_pivots(&mut self, on: bool) {
        self.skip = on;
    }
}

/// Largest diagonal entry of `A W Aᵀ`, used to scale regularization.
pub fn normal_diagonal_max(a: &SparseMatrix, w: &[f64]) -> f64 {
    (0..a.n_rows())
        .map(|i| a.row(i).map(|(j, v)| v * v * w[j]).sum::<f64>())
        .fold(0.0, f64::max)
}
