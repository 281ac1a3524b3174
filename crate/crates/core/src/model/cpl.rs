use serde::{Deserialize, Serialize};

use super::standard::{ColumnOrigin, CplBlockMeta, Provenance, StandardFormLP};
use super::ModelError;
use crate::linalg::SparseMatrix;

/// `coeffsᵀ y ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Decision space of a CPL program: `max objectiveᵀy` over box bounds and
/// linear constraints, later intersected with CPL constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CplBase {
    pub dim: usize,
    pub objective: Vec<f64>,
    /// `-inf` means unbounded below.
    pub lower: Vec<f64>,
    /// `+inf` means unbounded above.
    pub upper: Vec<f64>,
    pub linear: Vec<LinearConstraint>,
}

impl CplBase {
    pub fn new(objective: Vec<f64>) -> Self {
        let dim = objective.len();
        CplBase {
            dim,
            objective,
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
            linear: Vec::new(),
        }
    }
}

/// `Σ_i max_l (F_ilᵀ y + g_il) ≤ bound + hᵀy`, with an extra `0` inside each
/// max when `zero_piece` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CplSpec {
    pub p: usize,
    pub l: usize,
    /// Sparse `F_il`, indexed `i * l + piece`.
    pub f: Vec<Vec<(usize, f64)>>,
    pub g: Vec<f64>,
    pub bound: f64,
    /// Sparse `h`; empty means zero.
    pub h: Vec<(usize, f64)>,
    pub zero_piece: bool,
}

impl CplSpec {
    fn check(&self, dim: usize) -> Result<(), ModelError> {
        if self.p == 0 || self.l == 0 {
            return Err(ModelError::BadParams(
                "CPL needs at least one term and one piece".into(),
            ));
        }
        let pieces = self.p * self.l;
        if self.f.len() != pieces {
            return Err(ModelError::DimensionMismatch {
                what: "CPL piece vectors",
                expected: pieces,
                found: self.f.len(),
            });
        }
        if self.g.len() != pieces {
            return Err(ModelError::DimensionMismatch {
                what: "CPL piece offsets",
                expected: pieces,
                found: self.g.len(),
            });
        }
        let bad_index = self
            .f
            .iter()
            .flatten()
            .chain(&self.h)
            .any(|&(j, v)| j >= dim || !v.is_finite());
        if bad_index || !self.bound.is_finite() || self.g.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::BadParams(
                "CPL entries must be finite and inside the base dimension".into(),
            ));
        }
        Ok(())
    }

    /// `(lhs, rhs)` of the constraint at `y`.
    pub fn sides(&self, y: &[f64]) -> (f64, f64) {
        let dot = |v: &[(usize, f64)]| v.iter().map(|&(j, a)| a * y[j]).sum::<f64>();
        let lhs = (0..self.p)
            .map(|i| {
                let start = if self.zero_piece {
                    0.0
                } else {
                    f64::NEG_INFINITY
                };
                (0..self.l).fold(start, |m, k| {
                    let idx = i * self.l + k;
                    m.max(dot(&self.f[idx]) + self.g[idx])
                })
            })
            .sum();
        (lhs, self.bound + dot(&self.h))
    }
}

/// Whether `y` satisfies the constraint, by direct evaluation.
pub fn evaluate_cpl(spec: &CplSpec, y: &[f64]) -> bool {
    let (lhs, rhs) = spec.sides(y);
    lhs <= rhs
}

/// Whether `y` satisfies the constraint encoded by one block of a
/// [`build_cpl`] instance, read back from the emitted columns and costs.
///
/// Each auxiliary variable takes the smallest value its piece columns allow;
/// the constraint holds iff the `z` column is then satisfied.
pub fn cpl_holds_via_columns(lp: &StandardFormLP, meta: &CplBlockMeta, y: &[f64]) -> bool {
    let at = lp.a.transpose();
    let base = y.len();
    let base_dot = |col: usize| -> f64 {
        at.row(col)
            .filter(|&(r, _)| r < base)
            .map(|(r, v)| v * y[r])
            .sum()
    };
    let (r0, r1) = meta.rows;
    let mut aux = vec![f64::NEG_INFINITY; r1 - r0];
    for &col in &meta.piece_columns {
        for (r, v) in at.row(col) {
            if (r0..r1).contains(&r) {
                // v · aux_r + Fᵀy ≤ cost with v < 0.
                let bound = (lp.c[col] - base_dot(col)) / v;
                aux[r - r0] = aux[r - r0].max(bound);
            }
        }
    }
    let z = meta.z_column;
    let mut total = base_dot(z);
    for (r, v) in at.row(z) {
        if (r0..r1).contains(&r) {
            total += v * aux[r - r0];
        }
    }
    total <= lp.c[z]
}

/// Standard-form encoding of the dual of a CPL program.
///
/// Rows are the base dimension followed by one auxiliary row per term of each
/// spec. Columns are, per spec, one `z` column then the piece columns of each
/// term (zero piece last), followed by one column per finite box bound and
/// one per linear constraint.
pub fn build_cpl(base: &CplBase, specs: &[CplSpec]) -> Result<StandardFormLP, ModelError> {
    let dim = base.dim;
    for (what, len) in [
        ("base objective", base.objective.len()),
        ("lower bounds", base.lower.len()),
        ("upper bounds", base.upper.len()),
    ] {
        if len != dim {
            return Err(ModelError::DimensionMismatch {
                what,
                expected: dim,
                found: len,
            });
        }
    }
    for (v, (&lo, &hi)) in base.lower.iter().zip(&base.upper).enumerate() {
        if lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY || lo.is_nan() || hi.is_nan() {
            return Err(ModelError::InfeasibleBounds {
                var: format!("y{v}"),
                lo,
                hi,
            });
        }
    }
    for lc in &base.linear {
        if lc.coeffs.iter().any(|&(j, v)| j >= dim || !v.is_finite()) || !lc.rhs.is_finite() {
            return Err(ModelError::BadParams(
                "linear constraint outside the base dimension".into(),
            ));
        }
    }
    for s in specs {
        s.check(dim)?;
    }

    let m = dim + specs.iter().map(|s| s.p).sum::<usize>();
    let mut triplets = Vec::new();
    let mut c = Vec::new();
    let mut columns = Vec::new();
    let mut metadata = Vec::with_capacity(specs.len());
    let mut row = dim;
    for (k, s) in specs.iter().enumerate() {
        let z = c.len();
        c.push(s.bound);
        columns.push(ColumnOrigin::CplZ { spec: k });
        triplets.extend(s.h.iter().map(|&(j, v)| (j, z, -v)));
        triplets.extend((0..s.p).map(|i| (row + i, z, 1.0)));
        let mut pieces = Vec::with_capacity(s.p * (s.l + 1));
        for i in 0..s.p {
            for piece in 0..s.l {
                let idx = i * s.l + piece;
                let col = c.len();
                c.push(-s.g[idx]);
                columns.push(ColumnOrigin::CplSlack {
                    spec: k,
                    term: i,
                    piece,
                });
                triplets.extend(s.f[idx].iter().map(|&(j, v)| (j, col, v)));
                triplets.push((row + i, col, -1.0));
                pieces.push(col);
            }
            if s.zero_piece {
                let col = c.len();
                c.push(0.0);
                columns.push(ColumnOrigin::CplZeroPiece { spec: k, term: i });
                triplets.push((row + i, col, -1.0));
                pieces.push(col);
            }
        }
        metadata.push(CplBlockMeta {
            rows: (row, row + s.p),
            z_column: z,
            piece_columns: pieces,
            p: s.p,
            l: s.l,
        });
        row += s.p;
    }
    for v in 0..dim {
        if base.upper[v].is_finite() {
            triplets.push((v, c.len(), 1.0));
            c.push(base.upper[v]);
            columns.push(ColumnOrigin::CplBox {
                var: v,
                upper: true,
            });
        }
        if base.lower[v].is_finite() {
            triplets.push((v, c.len(), -1.0));
            c.push(-base.lower[v]);
            columns.push(ColumnOrigin::CplBox {
                var: v,
                upper: false,
            });
        }
    }
    for (index, lc) in base.linear.iter().enumerate() {
        let col = c.len();
        triplets.extend(lc.coeffs.iter().map(|&(j, v)| (j, col, v)));
        c.push(lc.rhs);
        columns.push(ColumnOrigin::CplLinear { index });
    }
    let a = SparseMatrix::from_triplets(m, c.len(), &triplets)
        .expect("indices in range by construction");
    let mut b = base.objective.clone();
    b.resize(m, 0.0);
    Ok(StandardFormLP {
        a,
        b,
        c,
        provenance: Provenance {
            columns,
            objective_scale: 1.0,
            objective_offset: 0.0,
        },
        cpl_metadata: Some(metadata),
    })
}
