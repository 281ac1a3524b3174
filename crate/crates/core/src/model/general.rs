use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::standard::{ColumnOrigin, Provenance, StandardFormLP};
use super::ModelError;
use crate::linalg::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjSense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub sense: RowSense,
    pub rhs: f64,
    /// Range value in MPS convention.
    pub range: Option<f64>,
}

impl Row {
    /// Activity interval `[lo, hi]`.
    pub fn bounds(&self) -> (f64, f64) {
        let r = self.range.map(f64::abs);
        match (self.sense, r, self.range) {
            (RowSense::Le, None, _) => (f64::NEG_INFINITY, self.rhs),
            (RowSense::Ge, None, _) => (self.rhs, f64::INFINITY),
            (RowSense::Eq, None, _) => (self.rhs, self.rhs),
            (RowSense::Le, Some(r), _) => (self.rhs - r, self.rhs),
            (RowSense::Ge, Some(r), _) => (self.rhs, self.rhs + r),
            (RowSense::Eq, Some(r), Some(raw)) if raw < 0.0 => (self.rhs - r, self.rhs),
            (RowSense::Eq, Some(r), _) => (self.rhs, self.rhs + r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub obj: f64,
    pub lo: f64,
    pub hi: f64,
}

/// General LP `opt objᵀx + const  s.t.  lo_i ≤ a_iᵀx ≤ hi_i,  lo ≤ x ≤ hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralLP {
    pub name: String,
    pub sense: ObjSense,
    pub obj_constant: f64,
    pub rows: Vec<Row>,
    pub vars: Vec<Variable>,
    /// `(row, var, value)`.
    pub entries: Vec<(usize, usize, f64)>,
}

impl GeneralLP {
    pub fn new(sense: ObjSense) -> Self {
        GeneralLP {
            name: String::new(),
            sense,
            obj_constant: 0.0,
            rows: Vec::new(),
            vars: Vec::new(),
            entries: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: &str, obj: f64, lo: f64, hi: f64) -> usize {
        self.vars.push(Variable {
            name: name.to_string(),
            obj,
            lo,
            hi,
        });
        self.vars.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: &str,
        sense: RowSense,
        rhs: f64,
        coeffs: &[(usize, f64)],
    ) -> usize {
        let i = self.rows.len();
        self.rows.push(Row {
            name: name.to_string(),
            sense,
            rhs,
            range: None,
        });
        self.entries.extend(coeffs.iter().map(|&(j, v)| (i, j, v)));
        i
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (what, names) in [
            (
                "row",
                self.rows
                    .iter()
                    .map(|r| r.name.as_str())
                    .collect::<Vec<_>>(),
            ),
            (
                "variable",
                self.vars.iter().map(|v| v.name.as_str()).collect(),
            ),
        ] {
            let mut seen = HashMap::new();
            for n in names {
                if !n.is_empty() && seen.insert(n, ()).is_some() {
                    return Err(ModelError::DuplicateName(format!("{what} {n}")));
                }
            }
        }
        for &(i, j, _) in &self.entries {
            if i >= self.rows.len() || j >= self.vars.len() {
                return Err(ModelError::DimensionMismatch {
                    what: "entry index",
                    expected: self.rows.len().max(self.vars.len()),
                    found: i.max(j),
                });
            }
        }
        Ok(())
    }

    /// Objective value at an original-space point.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.obj_constant
            + self
                .vars
                .iter()
                .zip(x)
                .map(|(v, xi)| v.obj * xi)
                .sum::<f64>()
    }
}

enum VarMap {
    Fixed(f64),
    Shifted { col: usize, lo: f64 },
    Negated { col: usize, hi: f64 },
    Split { pos: usize, neg: usize },
}

/// Standard form plus the map back to the original variables.
#[derive(Debug, Clone)]
pub struct Standardized {
    pub lp: StandardFormLP,
    var_maps: Vec<(f64, Option<(usize, f64)>, Option<(usize, f64)>)>,
}

impl Standardized {
    /// Original variable values for a standard-form point.
    pub fn recover(&self, x: &[f64]) -> Vec<f64> {
        self.var_maps
            .iter()
            .map(|&(base, a, b)| {
                let mut v = base;
                for (col, coef) in [a, b].into_iter().flatten() {
                    v += coef * x[col];
                }
                v
            })
            .collect()
    }
}

/// Converts to `min cᵀx, Ax = b, x ≥ 0`.
///
/// Finite lower bounds are shifted to zero, variables bounded only above are
/// negated, free variables are split, fixed variables become constants and
/// finite upper bounds become rows with a slack. `≤` rows gain a slack, `≥`
/// rows a surplus and ranged rows are emitted twice. Rows left without
/// entries are dropped if satisfied.
pub fn to_standard_form(lp: &GeneralLP) -> Result<Standardized, ModelError> {
    lp.validate()?;
    let sign = match lp.sense {
        ObjSense::Min => 1.0,
        ObjSense::Max => -1.0,
    };
    let mut offset = lp.obj_constant;
    let mut cols: Vec<ColumnOrigin> = Vec::new();
    let mut cost: Vec<f64> = Vec::new();
    let mut maps = Vec::with_capacity(lp.vars.len());
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();

    for (j, v) in lp.vars.iter().enumerate() {
        if v.lo > v.hi || v.lo == f64::INFINITY || v.hi == f64::NEG_INFINITY {
            return Err(ModelError::InfeasibleBounds {
                var: v.name.clone(),
                lo: v.lo,
                hi: v.hi,
            });
        }
        let mut push = |origin, c: f64| {
            cols.push(origin);
            cost.push(c);
            cols.len() - 1
        };
        let map = if v.lo == v.hi {
            offset += v.obj * v.lo;
            VarMap::Fixed(v.lo)
        } else if v.lo.is_finite() {
            offset += v.obj * v.lo;
            let col = push(ColumnOrigin::Original { var: j }, sign * v.obj);
            if v.hi.is_finite() {
                bound_rows.push((col, v.hi - v.lo));
            }
            VarMap::Shifted { col, lo: v.lo }
        } else if v.hi.is_finite() {
            offset += v.obj * v.hi;
            let col = push(ColumnOrigin::Negated { var: j }, -sign * v.obj);
            VarMap::Negated { col, hi: v.hi }
        } else {
            let pos = push(ColumnOrigin::FreeSplitPos { var: j }, sign * v.obj);
            let neg = push(ColumnOrigin::FreeSplitNeg { var: j }, -sign * v.obj);
            VarMap::Split { pos, neg }
        };
        maps.push(map);
    }

    // Row entries in terms of the new columns, plus constant shifts.
    let mut row_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.rows.len()];
    let mut row_shift = vec![0.0; lp.rows.len()];
    for &(i, j, a) in &lp.entries {
        match maps[j] {
            VarMap::Fixed(v) => row_shift[i] += a * v,
            VarMap::Shifted { col, lo } => {
                row_shift[i] += a * lo;
                row_entries[i].push((col, a));
            }
            VarMap::Negated { col, hi } => {
                row_shift[i] += a * hi;
                row_entries[i].push((col, -a));
            }
            VarMap::Split { pos, neg } => {
                row_entries[i].push((pos, a));
                row_entries[i].push((neg, -a));
            }
        }
    }

    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let new_col = |origin: ColumnOrigin, cols: &mut Vec<ColumnOrigin>, cost: &mut Vec<f64>| {
        cols.push(origin);
        cost.push(0.0);
        cols.len() - 1
    };
    for (i, row) in lp.rows.iter().enumerate() {
        let (lo, hi) = row.bounds();
        let (lo, hi) = (lo - row_shift[i], hi - row_shift[i]);
        let entries: Vec<(usize, f64)> = row_entries[i]
            .iter()
            .copied()
            .filter(|e| e.1 != 0.0)
            .collect();
        if entries.is_empty() {
            if lo > 1e-9 * (1.0 + lo.abs()) || hi < -1e-9 * (1.0 + hi.abs()) {
                return Err(ModelError::InfeasibleRow(row.name.clone()));
            }
            continue;
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            continue;
        }
        let mut emit = |rhs: f64,
                        extra: Option<(ColumnOrigin, f64)>,
                        b: &mut Vec<f64>,
                        t: &mut Vec<(usize, usize, f64)>| {
            let r = b.len();
            b.push(rhs);
            t.extend(entries.iter().map(|&(c, a)| (r, c, a)));
            if let Some((origin, coef)) = extra {
                let c = new_col(origin, &mut cols, &mut cost);
                t.push((r, c, coef));
            }
        };
        if lo == hi {
            emit(lo, None, &mut b, &mut triplets);
        } else if lo == f64::NEG_INFINITY {
            emit(
                hi,
                Some((ColumnOrigin::Slack { row: i }, 1.0)),
                &mut b,
                &mut triplets,
            );
        } else if hi == f64::INFINITY {
            emit(
                lo,
                Some((ColumnOrigin::Surplus { row: i }, -1.0)),
                &mut b,
                &mut triplets,
            );
        } else {
            emit(
                hi,
                Some((ColumnOrigin::Slack { row: i }, 1.0)),
                &mut b,
                &mut triplets,
            );
            emit(
                lo,
                Some((ColumnOrigin::RangeSlack { row: i }, -1.0)),
                &mut b,
                &mut triplets,
            );
        }
    }
    for (col, width) in bound_rows {
        let r = b.len();
        b.push(width);
        triplets.push((r, col, 1.0));
        let var = match cols[col] {
            ColumnOrigin::Original { var } => var,
            _ => unreachable!("bound rows come from shifted variables"),
        };
        cols.push(ColumnOrigin::BoundSlack { var });
        cost.push(0.0);
        triplets.push((r, cols.len() - 1, 1.0));
    }

    let n = cols.len();
    let a = SparseMatrix::from_triplets(b.len(), n, &triplets)
        .expect("indices in range by construction");
    let var_maps = maps
        .iter()
        .map(|m| match *m {
            VarMap::Fixed(v) => (v, None, None),
            VarMap::Shifted { col, lo } => (lo, Some((col, 1.0)), None),
            VarMap::Negated { col, hi } => (hi, Some((col, -1.0)), None),
            VarMap::Split { pos, neg } => (0.0, Some((pos, 1.0)), Some((neg, -1.0))),
        })
        .collect();
    let lp_std = StandardFormLP {
        a,
        b,
        c: cost,
        provenance: Provenance {
            columns: cols,
            objective_scale: sign,
            objective_offset: offset,
        },
        cpl_metadata: None,
    };
    Ok(Standardized {
        lp: lp_std,
        var_maps,
    })
}

/// Standard-form encoding of the dual `max bᵀy  s.t.  Aᵀy + s = c, s ≥ 0`
/// with `y = y⁺ − y⁻`: columns `[Aᵀ  −Aᵀ  I]`, costs `(−b, b, 0)`, rows `c`.
/// The reported objective keeps the meaning of the primal one.
pub fn dualize(lp: &StandardFormLP) -> StandardFormLP {
    let (m, n) = (lp.m(), lp.n());
    let mut triplets = Vec::with_capacity(2 * lp.a.nnz() + n);
    for (i, j, v) in lp.a.triplets() {
        triplets.push((j, i, v));
        triplets.push((j, m + i, -v));
    }
    for j in 0..n {
        triplets.push((j, 2 * m + j, 1.0));
    }
    let a = SparseMatrix::from_triplets(n, 2 * m + n, &triplets)
        .expect("indices in range by construction");
    let c: Vec<f64> =
        lp.b.iter()
            .map(|v| -v)
            .chain(lp.b.iter().copied())
            .chain(std::iter::repeat(0.0).take(n))
            .collect();
    let columns = (0..m)
        .map(|row| ColumnOrigin::DualPos { row })
        .chain((0..m).map(|row| ColumnOrigin::DualNeg { row }))
        .chain((0..n).map(|col| ColumnOrigin::DualSlack { col }))
        .collect();
    StandardFormLP {
        a,
        b: lp.c.clone(),
        c,
        provenance: Provenance {
            columns,
            objective_scale: -lp.provenance.objective_scale,
            objective_offset: lp.provenance.objective_offset,
        },
        cpl_metadata: None,
    }
}
