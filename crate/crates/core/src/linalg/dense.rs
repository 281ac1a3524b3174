use super::{dot, LinalgError};

/// Relative pivot floor: factorization fails when a pivot drops below
/// `PIVOT_FLOOR · max_diagonal`.
pub const PIVOT_FLOOR: f64 = 1e-13;

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

/// Symmetric matrix stored as its packed lower triangle, row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseSymMatrix {
    pub fn zeros(dim: usize) -> Self {
        DenseSymMatrix {
            dim,
            data: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.add_to_diagonal(1.0);
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Takes the lower triangle of a square row-major matrix.
    pub fn from_lower(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(LinalgError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            for j in 0..=i {
                m.set(i, j, row[j]);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.data[packed_index(r, c)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.data[packed_index(r, c)] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.data[packed_index(r, c)] += v;
    }

    pub fn add_to_diagonal(&mut self, v: f64) {
        for i in 0..self.dim {
            self.data[packed_index(i, i)] += v;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.data[packed_index(i, i)])
            .collect()
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.data[packed_index(i, i)])
            .fold(0.0, f64::max)
    }

    /// `self += alpha · v vᵀ` for a vector given by sorted indices and values.
    pub fn add_sparse_rank_one(&mut self, alpha: f64, idx: &[usize], vals: &[f64]) {
        debug_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        for a in 0..idx.len() {
            let base = idx[a] * (idx[a] + 1) / 2;
            let va = alpha * vals[a];
            for b in 0..=a {
                self.data[base + idx[b]] += va * vals[b];
            }
        }
    }

    /// `self += alpha · (u vᵀ + v uᵀ)` for dense vectors.
    pub fn add_symmetric_rank_two(&mut self, alpha: f64, u: &[f64], v: &[f64]) {
        for i in 0..self.dim {
            let (ui, vi) = (alpha * u[i], alpha * v[i]);
            if ui == 0.0 && vi == 0.0 {
                continue;
            }
            let row = &mut self.data[packed_index(i, 0)..=packed_index(i, i)];
            for (j, slot) in row.iter_mut().enumerate() {
                *slot += ui * v[j] + vi * u[j];
            }
        }
    }

    pub fn add_assign(&mut self, other: &DenseSymMatrix) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.dim {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            let row = &self.data[packed_index(i, 0)..=packed_index(i, i)];
            out[i] += dot(&row[..i], &x[..i]) + row[i] * x[i];
            for j in 0..i {
                out[j] += row[j] * x[i];
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Lower-triangular Cholesky factor in packed storage.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    dim: usize,
    lower: Vec<f64>,
    success: bool,
    failed_pivot: Option<usize>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn success(&self) -> bool {
        self.success
    }

    pub fn failed_pivot(&self) -> Option<usize> {
        self.failed_pivot
    }

    /// `Err(NotPositiveDefinite)` when the factorization broke down.
    pub fn check(&self) -> Result<(), LinalgError> {
        match self.failed_pivot {
            Some(pivot) => Err(LinalgError::NotPositiveDefinite { pivot }),
            None => Ok(()),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.lower[packed_index(i, j)]
        }
    }

    /// Solves `L z = r` in place.
    pub fn forward_in_place(&self, r: &mut [f64]) {
        for i in 0..self.dim {
            let row = &self.lower[packed_index(i, 0)..=packed_index(i, i)];
            r[i] = (r[i] - dot(&row[..i], &r[..i])) / row[i];
        }
    }

    /// Solves `Lᵀ x = z` in place.
    pub fn backward_in_place(&self, z: &mut [f64]) {
        for i in (0..self.dim).rev() {
            let row = &self.lower[packed_index(i, 0)..=packed_index(i, i)];
            z[i] /= row[i];
            let zi = z[i];
            for j in 0..i {
                z[j] -= row[j] * zi;
            }
        }
    }

    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>, LinalgError> {
        solve_cholesky(self, r)
    }
}

/// Factors `M + regularization · I = L Lᵀ`.
///
/// Breakdown is reported through [`CholeskyFactor::success`] and
/// [`CholeskyFactor::failed_pivot`] rather than an error, so callers can retry
/// with a larger regularization.
pub fn cholesky(m: &DenseSymMatrix, regularization: f64) -> CholeskyFactor {
    factor_impl(m, regularization, false).0
}

/// Factor value substituted for a pivot below the floor.
pub const SKIPPED_PIVOT: f64 = 1e64;

/// Relative cancellation at which [`cholesky_skipping`] drops a pivot.
pub const SKIP_FLOOR: f64 = 1e-14;

/// Like [`cholesky`], but a pivot that lost all but `SKIP_FLOOR` of its own
/// diagonal entry is replaced by [`SKIPPED_PIVOT`] instead of failing, which
/// drives the matching solution component to zero. Returns the factor and
/// the number of skipped pivots.
pub fn cholesky_skipping(m: &DenseSymMatrix, regularization: f64) -> (CholeskyFactor, usize) {
    factor_impl(m, regularization, true)
}

fn factor_impl(m: &DenseSymMatrix, regularization: f64, skip: bool) -> (CholeskyFactor, usize) {
    let n = m.dim();
    let mut lower = m.data.clone();
    if regularization != 0.0 {
        for i in 0..n {
            lower[packed_index(i, i)] += regularization;
        }
    }
    let max_diag = (0..n)
        .map(|i| lower[packed_index(i, i)])
        .fold(0.0, f64::max);
    let floor = PIVOT_FLOOR * max_diag;
    let mut skipped = 0;

    for i in 0..n {
        let off_i = packed_index(i, 0);
        let (head, tail) = lower.split_at_mut(off_i);
        let row_i = &mut tail[..=i];
        for j in 0..i {
            let off_j = packed_index(j, 0);
            let row_j = &head[off_j..=off_j + j];
            row_i[j] = (row_i[j] - dot(&row_i[..j], &row_j[..j])) / row_j[j];
        }
        let diag = row_i[i];
        let pivot = diag - dot(&row_i[..i], &row_i[..i]);
        let floor = if skip { SKIP_FLOOR * diag } else { floor };
        if !(pivot > floor) || pivot <= 0.0 {
            if skip && !pivot.is_nan() {
                row_i[i] = SKIPPED_PIVOT;
                skipped += 1;
                continue;
            }
            let f = CholeskyFactor {
                dim: n,
                lower,
                success: false,
                failed_pivot: Some(i),
            };
            return (f, skipped);
        }
        row_i[i] = pivot.sqrt();
    }
    let f = CholeskyFactor {
        dim: n,
        lower,
        success: true,
        failed_pivot: None,
    };
    (f, skipped)
}

/// Solves `L Lᵀ x = r` with forward then backward substitution.
pub fn solve_cholesky(factor: &CholeskyFactor, r: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if !factor.success {
        return Err(LinalgError::FactorFailed);
    }
    if r.len() != factor.dim {
        return Err(LinalgError::DimensionMismatch {
            expected: factor.dim,
            found: r.len(),
        });
    }
    let mut x = r.to_vec();
    factor.forward_in_place(&mut x);
    factor.backward_in_place(&mut x);
    Ok(x)
}
