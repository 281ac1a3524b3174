//! Normal equations with the eliminable blocks removed.
//!
//! Rows are split into the first block row `R1` and blocks `I_k`. For block
//! `k` with diagonal columns `E_k` and coupling columns `J_k` (the columns
//! outside `E_k` that carry a nonzero in its rows):
//!
//! ```text
//!   N_kk = Δ_k + V_k V_kᵀ,     Δ_k = diag(E_k W E_kᵀ),  V_k = Y_k W_J^{1/2}
//!   N_1k = U_k W_J Y_kᵀ + H_kᵀ
//! ```
//!
//! with `U_k = A[R1, J_k]`, `Y_k = A[I_k, J_k]` and `H_kᵀ = A[R1, E_k] W E_kᵀ`,
//! whose column `r` is denoted `g_r`.
//!
//! The coupling flux `t_k = W_J (U_kᵀ Δy1 + Y_kᵀ Δy_k)` is kept as an extra
//! unknown. Eliminating `Δy_k` and then `t_k` gives
//!
//! ```text
//!   S = S^E + Σ_k F_k M_k⁻¹ F_kᵀ,   F_k = U_k − Σ_r g_r y_rᵀ / δ_r
//!   M_k = W_J⁻¹ + Y_kᵀ Δ_k⁻¹ Y_k = W_J^{-1/2} (I + V_kᵀ Δ_k⁻¹ V_k) W_J^{-1/2}
//! ```
//!
//! where `S^E` holds the first-block columns outside every block plus, for
//! each block row, `N^E − g gᵀ/δ` written as a sum of positive semidefinite
//! pairwise terms. Nothing is subtracted, so `S` stays well conditioned when
//! individual weights span many orders of magnitude. That is the regime near
//! an optimum. No `m_k × m_k` matrix is formed; work per block is linear in
//! `m_k`.

use rayon::prelude::*;

use super::normal::{BackendKind, NormalEquations};
use super::IpmError;
use crate::detect::{validate_structure, Block, BlockStructure};
use crate::linalg::{
    accumulate_gram_of_transpose, cholesky, cholesky_skipping, dot, CholeskyFactor, DenseSymMatrix,
    SparseMatrix,
};

/// Blocks handled per parallel task; contributions are merged in block order.
const CHUNK: usize = 8;

struct BlockData {
    rows: Vec<usize>,
    coupling: Vec<usize>,
    /// `Y_k`, row-major `m_k × p`.
    y: Vec<f64>,
    /// Columns of `U_k`, each of length `m1`.
    u: Vec<Vec<f64>>,
    /// Diagonal-block entries of each row.
    e_ptr: Vec<usize>,
    e_col: Vec<usize>,
    e_val: Vec<f64>,
    f: BlockFactor,
}

#[derive(Default)]
struct BlockFactor {
    delta: Vec<f64>,
    /// `g_r` per row, sparse over `R1` with sorted indices.
    h_ptr: Vec<usize>,
    h_idx: Vec<usize>,
    h_val: Vec<f64>,
    /// `W_J^{1/2}`.
    sw: Vec<f64>,
    /// `I + V_kᵀ Δ⁻¹ V_k = L Lᵀ`.
    inner: Option<CholeskyFactor>,
    /// Columns of `G_k = F_k W_J^{1/2} L⁻ᵀ`, so `G Gᵀ = F M⁻¹ Fᵀ`.
    g: Vec<Vec<f64>>,
}

/// Split of the rows into kept rows and eliminated blocks.
struct Partition {
    m: usize,
    first_rows: Vec<usize>,
    /// `A[R1, :]ᵀ`; row `c` lists the first-block entries of column `c`.
    a1t: SparseMatrix,
    /// Columns owned by some block, diagonal or coupling.
    in_block: Vec<bool>,
    blocks: Vec<BlockData>,
}

/// A block row is kept in the factored system once its diagonal weight
/// falls this far below its coupling weight; eliminating it first would
/// amplify rounding by the inverse ratio.
const KEEP_RATIO: f64 = 1e-6;

/// Reduced normal-equation solver for a validated block structure.
pub struct ReducedWorkspace {
    a: SparseMatrix,
    structure: BlockStructure,
    /// Block rows moved into the factored system; never cleared.
    kept: Vec<bool>,
    part: Partition,
    factor: Option<CholeskyFactor>,
    skip: bool,
}

impl ReducedWorkspace {
    pub fn new(a: &SparseMatrix, structure: &BlockStructure) -> Result<Self, IpmError> {
        let report = validate_structure(a, structure);
        if !report.reducible() {
            let (name, witness) = report.first_failure().unwrap_or(("unknown", ""));
            return Err(IpmError::StructureViolation(format!("{name}: {witness}")));
        }
        Ok(ReducedWorkspace {
            a: a.clone(),
            structure: structure.clone(),
            kept: vec![false; a.n_rows()],
            part: Partition::new(a, structure),
            factor: None,
            skip: false,
        })
    }

    /// Size of the factored system, including kept block rows.
    pub fn m1(&self) -> usize {
        self.part.first_rows.len()
    }

    pub fn coupling_ranks(&self) -> Vec<usize> {
        self.part.blocks.iter().map(|b| b.coupling.len()).collect()
    }

    /// `V_k` for weights `w`, row-major `m_k × p_k`.
    pub fn coupling_factor(&self, k: usize, w: &[f64]) -> Vec<f64> {
        let b = &self.part.blocks[k];
        let p = b.coupling.len();
        let sw: Vec<f64> = b.coupling.iter().map(|&c| w[c].sqrt()).collect();
        b.y.iter().enumerate().map(|(t, v)| v * sw[t % p]).collect()
    }

    /// `U W_J (Y_kᵀ Δ_k⁻¹ Y_k) W_J Uᵀ` for weights `w`, built from the
    /// `p_k × p_k` inner product matrix.
    pub fn coupling_term(&self, k: usize, w: &[f64]) -> Result<DenseSymMatrix, IpmError> {
        let part = &self.part;
        let m1 = self.m1();
        let b = &part.blocks[k];
        let p = b.coupling.len();
        let mut f = BlockFactor::default();
        diagonal_part(b, &part.a1t, m1, w, 0.0, &mut f)?;
        let q = inner_products(b, &f.delta);
        let wj: Vec<f64> = b.coupling.iter().map(|&c| w[c]).collect();
        let mut out = DenseSymMatrix::zeros(m1);
        for jj in 0..p {
            let mut col = vec![0.0; m1];
            for j in 0..p {
                let coef = wj[j] * q[j * p + jj] * wj[jj];
                for (o, ui) in col.iter_mut().zip(&b.u[j]) {
                    *o += coef * ui;
                }
            }
            out.add_symmetric_rank_two(0.5, &col, &b.u[jj]);
        }
        Ok(out)
    }

    /// Marks block rows whose diagonal weight is negligible next to their
    /// coupling weight; rebuilds the partition if any are new.
    fn keep_weak_rows(&mut self, w: &[f64]) {
        let mut changed = false;
        for b in &self.part.blocks {
            let p = b.coupling.len();
            for (r, &row) in b.rows.iter().enumerate() {
                let delta: f64 = (b.e_ptr[r]..b.e_ptr[r + 1])
                    .map(|t| b.e_val[t].powi(2) * w[b.e_col[t]])
                    .sum();
                let coupled: f64 = (0..p)
                    .map(|j| b.y[r * p + j].powi(2) * w[b.coupling[j]])
                    .sum();
                if delta < KEEP_RATIO * coupled {
                    self.kept[row] = true;
                    changed = true;
                }
            }
        }
        if changed {
            let s = without_rows(&self.a, &self.structure, &self.kept);
            self.part = Partition::new(&self.a, &s);
        }
    }
}

/// `s` with the rows flagged in `drop` moved to the first block row.
fn without_rows(a: &SparseMatrix, s: &BlockStructure, drop: &[bool]) -> BlockStructure {
    let blocks = s
        .blocks
        .iter()
        .filter_map(|b| {
            let rows: Vec<usize> = b.rows.iter().copied().filter(|&r| !drop[r]).collect();
            if rows.is_empty() {
                return None;
            }
            let mut touched = vec![false; a.n_cols()];
            for &r in &rows {
                for &c in a.row_cols(r) {
                    touched[c] = true;
                }
            }
            let keep = |cols: &[usize]| cols.iter().copied().filter(|&c| touched[c]).collect();
            Some(Block {
                rows,
                diag_cols: keep(&b.diag_cols),
                coupling_cols: keep(&b.coupling_cols),
            })
        })
        .collect();
    BlockStructure {
        n_rows: s.n_rows,
        n_cols: s.n_cols,
        blocks,
    }
}

impl Partition {
    fn new(a: &SparseMatrix, structure: &BlockStructure) -> Self {
        let m = a.n_rows();
        let first_rows = structure.first_rows();
        let m1 = first_rows.len();
        let a1t = a.select_rows(&first_rows).transpose();
        let support = structure.coupling_support(a);
        let mut in_block = vec![false; a.n_cols()];
        let blocks = structure
            .blocks
            .iter()
            .zip(support)
            .map(|(blk, coupling)| {
                let p = coupling.len();
                let mut y = vec![0.0; blk.rows.len() * p];
                let (mut e_ptr, mut e_col, mut e_val) = (vec![0], Vec::new(), Vec::new());
                for (r, &row) in blk.rows.iter().enumerate() {
                    for (c, v) in a.row(row) {
                        in_block[c] = true;
                        if blk.diag_cols.binary_search(&c).is_ok() {
                            e_col.push(c);
                            e_val.push(v);
                        } else {
                            let j = coupling.binary_search(&c).expect("support covers the row");
                            y[r * p + j] = v;
                        }
                    }
                    e_ptr.push(e_col.len());
                }
                let u = coupling
                    .iter()
                    .map(|&c| {
                        let mut col = vec![0.0; m1];
                        for (i, v) in a1t.row(c) {
                            col[i] = v;
                        }
                        col
                    })
                    .collect();
                BlockData {
                    rows: blk.rows.clone(),
                    coupling,
                    y,
                    u,
                    e_ptr,
                    e_col,
                    e_val,
                    f: BlockFactor::default(),
                }
            })
            .collect();
        Partition {
            m,
            first_rows,
            a1t,
            in_block,
            blocks,
        }
    }
}

/// `δ_r` and `g_r` for every block row.
fn diagonal_part(
    b: &BlockData,
    a1t: &SparseMatrix,
    m1: usize,
    w: &[f64],
    reg: f64,
    f: &mut BlockFactor,
) -> Result<(), IpmError> {
    f.delta.clear();
    f.h_ptr.clear();
    f.h_idx.clear();
    f.h_val.clear();
    f.h_ptr.push(0);
    let mut acc = vec![0.0; m1];
    let mut seen = vec![false; m1];
    let mut touched: Vec<usize> = Vec::new();
    for r in 0..b.rows.len() {
        let mut delta = reg;
        for t in b.e_ptr[r]..b.e_ptr[r + 1] {
            let (c, e) = (b.e_col[t], b.e_val[t]);
            let ew = e * w[c];
            delta += e * ew;
            for (i, v) in a1t.row(c) {
                if !seen[i] {
                    seen[i] = true;
                    touched.push(i);
                }
                acc[i] += ew * v;
            }
        }
        if !(delta > 0.0) {
            return Err(IpmError::StructureViolation(format!(
                "zero diagonal weight in row {} of a block",
                b.rows[r]
            )));
        }
        f.delta.push(delta);
        touched.sort_unstable();
        for &i in &touched {
            f.h_idx.push(i);
            f.h_val.push(acc[i]);
            acc[i] = 0.0;
            seen[i] = false;
        }
        touched.clear();
        f.h_ptr.push(f.h_idx.len());
    }
    Ok(())
}

/// `Y_kᵀ Δ⁻¹ Y_k`, row-major `p × p`.
fn inner_products(b: &BlockData, delta: &[f64]) -> Vec<f64> {
    let p = b.coupling.len();
    let mut q = vec![0.0; p * p];
    for (r, &d) in delta.iter().enumerate() {
        let yr = &b.y[r * p..(r + 1) * p];
        for j in 0..p {
            let yj = yr[j] / d;
            if yj == 0.0 {
                continue;
            }
            for jj in 0..p {
                q[j * p + jj] += yj * yr[jj];
            }
        }
    }
    q
}

fn prepare_block(
    b: &BlockData,
    a1t: &SparseMatrix,
    m1: usize,
    w: &[f64],
    reg: f64,
    f: &mut BlockFactor,
) -> Result<(), IpmError> {
    diagonal_part(b, a1t, m1, w, reg, f)?;
    let p = b.coupling.len();
    let q = inner_products(b, &f.delta);
    f.sw = b.coupling.iter().map(|&c| w[c].sqrt()).collect();
    let mut inner = DenseSymMatrix::identity(p);
    for j in 0..p {
        for jj in 0..=j {
            inner.add(j, jj, f.sw[j] * q[j * p + jj] * f.sw[jj]);
        }
    }
    // Pivots are at least one in exact arithmetic.
    let l = cholesky(&inner, 0.0);
    l.check()?;

    // Columns of F W_J^{1/2}, then rows of G solve L gᵢ = (F W_J^{1/2})ᵢᵀ.
    let mut fs = b.u.clone();
    for r in 0..b.rows.len() {
        let inv = 1.0 / f.delta[r];
        for j in 0..p {
            let coef = b.y[r * p + j] * inv;
            if coef == 0.0 {
                continue;
            }
            for t in f.h_ptr[r]..f.h_ptr[r + 1] {
                fs[j][f.h_idx[t]] -= coef * f.h_val[t];
            }
        }
    }
    for (col, &s) in fs.iter_mut().zip(&f.sw) {
        col.iter_mut().for_each(|v| *v *= s);
    }
    let mut g = vec![vec![0.0; m1]; p];
    let mut row = vec![0.0; p];
    for i in 0..m1 {
        for j in 0..p {
            row[j] = fs[j][i];
        }
        if row.iter().all(|&v| v == 0.0) {
            continue;
        }
        l.forward_in_place(&mut row);
        for j in 0..p {
            g[j][i] = row[j];
        }
    }
    f.g = g;
    f.inner = Some(l);
    Ok(())
}

/// Adds `Σ_c w_c a_c a_cᵀ − g gᵀ/δ` for every row of the block, where `c`
/// runs over the diagonal columns of the row and `a_c` is the first-block
/// part of column `c`.
///
/// With `δ = ρ + Σ e_c² w_c` the difference equals
/// `(1/δ)[ρ Σ_c w_c a_c a_cᵀ + Σ_{c<c'} w_c w_c' u u ᵀ]`,
/// `u = e_c' a_c − e_c a_c'`, which is a sum of PSD terms.
fn accumulate_diagonal(
    s: &mut DenseSymMatrix,
    b: &BlockData,
    a1t: &SparseMatrix,
    w: &[f64],
    reg: f64,
) {
    let f = &b.f;
    let mut idx = Vec::new();
    let mut val = Vec::new();
    for r in 0..b.rows.len() {
        let (lo, hi) = (b.e_ptr[r], b.e_ptr[r + 1]);
        let inv = 1.0 / f.delta[r];
        for t in lo..hi {
            let c = b.e_col[t];
            if reg > 0.0 && a1t.row_cols(c).len() > 0 {
                s.add_sparse_rank_one(reg * w[c] * inv, a1t.row_cols(c), a1t.row_values(c));
            }
            for t2 in t + 1..hi {
                let c2 = b.e_col[t2];
                let (ia, va) = (a1t.row_cols(c), a1t.row_values(c));
                let (ib, vb) = (a1t.row_cols(c2), a1t.row_values(c2));
                if ia.is_empty() && ib.is_empty() {
                    continue;
                }
                let (ea, eb) = (b.e_val[t], b.e_val[t2]);
                idx.clear();
                val.clear();
                let (mut x, mut z) = (0, 0);
                while x < ia.len() || z < ib.len() {
                    let next_a = ia.get(x).copied().unwrap_or(usize::MAX);
                    let next_b = ib.get(z).copied().unwrap_or(usize::MAX);
                    let i = next_a.min(next_b);
                    let mut v = 0.0;
                    if next_a == i {
                        v += eb * va[x];
                        x += 1;
                    }
                    if next_b == i {
                        v -= ea * vb[z];
                        z += 1;
                    }
                    idx.push(i);
                    val.push(v);
                }
                s.add_sparse_rank_one(w[c] * w[c2] * inv, &idx, &val);
            }
        }
    }
}

impl BlockData {
    /// `M_k⁻¹ v = W^{1/2} L⁻ᵀ L⁻¹ W^{1/2} v` split into its halves.
    fn half_inner(&self, v: &[f64]) -> Vec<f64> {
        let f = &self.f;
        let mut x: Vec<f64> = v.iter().zip(&f.sw).map(|(a, s)| a * s).collect();
        f.inner.as_ref().expect("prepared").forward_in_place(&mut x);
        x
    }

    /// `−Y_kᵀ Δ⁻¹ r_k`.
    fn flux_rhs(&self, rk: &[f64]) -> Vec<f64> {
        let p = self.coupling.len();
        let mut q = vec![0.0; p];
        for (r, &v) in rk.iter().enumerate() {
            let s = v / self.f.delta[r];
            for j in 0..p {
                q[j] -= self.y[r * p + j] * s;
            }
        }
        q
    }
}

impl NormalEquations for ReducedWorkspace {
    fn kind(&self) -> BackendKind {
        BackendKind::Reduced
    }

    fn factored_dim(&self) -> usize {
        self.m1()
    }

    fn factor(&mut self, w: &[f64], reg: f64) -> Result<(), IpmError> {
        self.keep_weak_rows(w);
        let m1 = self.m1();
        let part = &mut self.part;
        let a1t = &part.a1t;
        let mut s = DenseSymMatrix::zeros(m1);
        let outside: Vec<f64> = w
            .iter()
            .zip(&part.in_block)
            .map(|(&v, &inb)| if inb { 0.0 } else { v })
            .collect();
        accumulate_gram_of_transpose(&mut s, a1t, &outside, 1.0);
        s.add_to_diagonal(reg);
        for chunk in part.blocks.chunks_mut(CHUNK) {
            chunk
                .par_iter_mut()
                .map(|b| {
                    let mut f = std::mem::take(&mut b.f);
                    let out = prepare_block(b, a1t, m1, w, reg, &mut f);
                    b.f = f;
                    out
                })
                .collect::<Result<Vec<()>, IpmError>>()?;
            for b in chunk.iter() {
                accumulate_diagonal(&mut s, b, a1t, w, reg);
                for g in &b.f.g {
                    s.add_symmetric_rank_two(0.5, g, g);
                }
            }
        }
        let f = if self.skip {
            cholesky_skipping(&s, 0.0).0
        } else {
            cholesky(&s, 0.0)
        };
        let ok = f.check();
        self.factor = Some(f);
        ok.map_err(IpmError::from)
    }

    fn solve(&self, r: &[f64]) -> Result<Vec<f64>, IpmError> {
        let f = self.factor.as_ref().ok_or(IpmError::NotFactored)?;
        let part = &self.part;
        if r.len() != part.m {
            return Err(IpmError::DimensionMismatch {
                expected: part.m,
                found: r.len(),
            });
        }
        let mut r1: Vec<f64> = part.first_rows.iter().map(|&i| r[i]).collect();
        let rk: Vec<Vec<f64>> = part
            .blocks
            .iter()
            .map(|b| b.rows.iter().map(|&i| r[i]).collect())
            .collect();
        let mut xi = Vec::with_capacity(part.blocks.len());
        for (b, rk) in part.blocks.iter().zip(&rk) {
            let bf = &b.f;
            for (row, &v) in rk.iter().enumerate() {
                let s = v / bf.delta[row];
                for t in bf.h_ptr[row]..bf.h_ptr[row + 1] {
                    r1[bf.h_idx[t]] -= bf.h_val[t] * s;
                }
            }
            let x = b.half_inner(&b.flux_rhs(rk));
            for (g, &xj) in bf.g.iter().zip(&x) {
                if xj != 0.0 {
                    for (o, gi) in r1.iter_mut().zip(g) {
                        *o += xj * gi;
                    }
                }
            }
            xi.push(x);
        }
        let y1 = crate::linalg::solve_cholesky(f, &r1)?;
        let mut out = vec![0.0; part.m];
        for (&i, &v) in part.first_rows.iter().zip(&y1) {
            out[i] = v;
        }
        for ((b, rk), x) in part.blocks.iter().zip(&rk).zip(&xi) {
            let bf = &b.f;
            let p = b.coupling.len();
            // t = W^{1/2} L⁻ᵀ (Gᵀ y1 − ξ).
            let mut t: Vec<f64> =
                bf.g.iter()
                    .zip(x)
                    .map(|(g, &xj)| dot(g, &y1) - xj)
                    .collect();
            bf.inner
                .as_ref()
                .expect("prepared")
                .backward_in_place(&mut t);
            t.iter_mut().zip(&bf.sw).for_each(|(v, s)| *v *= s);
            for (row, &i) in b.rows.iter().enumerate() {
                let mut v = rk[row] - dot(&b.y[row * p..(row + 1) * p], &t);
                for k in bf.h_ptr[row]..bf.h_ptr[row + 1] {
                    v -= bf.h_val[k] * y1[bf.h_idx[k]];
                }
                out[i] = v / bf.delta[row];
            }
        }
        Ok(out)
    }

    fn set_skip_tiny_pivots(&mut self, on: bool) {
        self.skip = on;
    }
}
