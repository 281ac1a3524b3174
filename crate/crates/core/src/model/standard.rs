use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::linalg::{dot, SparseMatrix};

/// Where a standard-form column came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ColumnOrigin {
    /// `x_var = shift + x_col`.
    Original {
        var: usize,
    },
    /// `x_var = hi − x_col` for a variable bounded only from above.
    Negated {
        var: usize,
    },
    FreeSplitPos {
        var: usize,
    },
    FreeSplitNeg {
        var: usize,
    },
    Slack {
        row: usize,
    },
    Surplus {
        row: usize,
    },
    /// Slack of the second row emitted for a ranged constraint.
    RangeSlack {
        row: usize,
    },
    /// Slack of the row `x_col + t = hi − lo` encoding an upper bound.
    BoundSlack {
        var: usize,
    },
    CplZ {
        spec: usize,
    },
    CplSlack {
        spec: usize,
        term: usize,
        piece: usize,
    },
    /// The implicit zero piece of `max{0, …}`.
    CplZeroPiece {
        spec: usize,
        term: usize,
    },
    /// Bound column `±e_var` of the base variables.
    CplBox {
        var: usize,
        upper: bool,
    },
    /// Extra linear constraint on the base variables.
    CplLinear {
        index: usize,
    },
    DualPos {
        row: usize,
    },
    DualNeg {
        row: usize,
    },
    DualSlack {
        col: usize,
    },
    /// Column without a more specific origin.
    Structural {
        index: usize,
    },
}

/// Column origins plus the affine map from `cᵀx` to the reported objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub columns: Vec<ColumnOrigin>,
    pub objective_scale: f64,
    pub objective_offset: f64,
}

impl Provenance {
    pub fn structural(n: usize) -> Self {
        Provenance {
            columns: (0..n)
                .map(|index| ColumnOrigin::Structural { index })
                .collect(),
            objective_scale: 1.0,
            objective_offset: 0.0,
        }
    }
}

/// Layout of one block emitted by the CPL builder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CplBlockMeta {
    /// Half-open row range of the auxiliary rows.
    pub rows: (usize, usize),
    pub z_column: usize,
    /// Piece columns, including zero-piece columns, term-major.
    pub piece_columns: Vec<usize>,
    pub p: usize,
    pub l: usize,
}

/// `min cᵀx  s.t.  A x = b, x ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardFormLP {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub provenance: Provenance,
    pub cpl_metadata: Option<Vec<CplBlockMeta>>,
}

impl StandardFormLP {
    pub fn new(a: SparseMatrix, b: Vec<f64>, c: Vec<f64>) -> Result<Self, ModelError> {
        let n = a.n_cols();
        let lp = StandardFormLP {
            a,
            b,
            c,
            provenance: Provenance::structural(n),
            cpl_metadata: None,
        };
        lp.check()?;
        Ok(lp)
    }

    pub fn from_dense(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<Self, ModelError> {
        let n = c.len();
        if let Some(r) = a.iter().find(|r| r.len() != n) {
            return Err(ModelError::DimensionMismatch {
                what: "constraint row",
                expected: n,
                found: r.len(),
            });
        }
        let mut m = SparseMatrix::from_dense(a);
        if a.is_empty() {
            m = SparseMatrix::zeros(0, n);
        }
        Self::new(m, b.to_vec(), c.to_vec())
    }

    pub fn m(&self) -> usize {
        self.a.n_rows()
    }

    pub fn n(&self) -> usize {
        self.a.n_cols()
    }

    pub fn check(&self) -> Result<(), ModelError> {
        let (m, n) = (self.a.n_rows(), self.a.n_cols());
        for (what, expected, found) in [
            ("b", m, self.b.len()),
            ("c", n, self.c.len()),
            ("provenance", n, self.provenance.columns.len()),
        ] {
            if expected != found {
                return Err(ModelError::DimensionMismatch {
                    what,
                    expected,
                    found,
                });
            }
        }
        Ok(())
    }

    /// Objective of the originating model for a standard-form point.
    pub fn reported_objective(&self, x: &[f64]) -> f64 {
        self.provenance.objective_scale * dot(&self.c, x) + self.provenance.objective_offset
    }

    pub fn to_json(&self) -> String {
        let instance = InstanceJson {
            m: self.m(),
            n: self.n(),
            triplets: self.a.triplets().collect(),
            b: self.b.clone(),
            c: self.c.clone(),
            provenance: self.provenance.clone(),
            cpl_metadata: self.cpl_metadata.clone(),
        };
        serde_json::to_string(&instance).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let inst: InstanceJson =
            serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        let a = SparseMatrix::from_triplets(inst.m, inst.n, &inst.triplets)
            .map_err(|e| ModelError::Json(e.to_string()))?;
        let lp = StandardFormLP {
            a,
            b: inst.b,
            c: inst.c,
            provenance: inst.provenance,
            cpl_metadata: inst.cpl_metadata,
        };
        lp.check()?;
        Ok(lp)
    }
}

/// Interchange layout; field order is the serialized order.
#[derive(Serialize, Deserialize)]
struct InstanceJson {
    m: usize,
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
    c: Vec<f64>,
    provenance: Provenance,
    cpl_metadata: Option<Vec<CplBlockMeta>>,
}
