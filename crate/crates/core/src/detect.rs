//! Greedy detection of block-diagonal-plus-low-rank structure.
//!
//! A constraint matrix with the structure
//!
//! ```text
//!     A11  A12 .. A1K
//!     A21  E2       O
//!      :       ..
//!     AK1  O       EK
//! ```
//!
//! where every `Ek Ekᵀ` is diagonal and the `Ak1` touch only a few, mutually
//! disjoint columns, yields a normal matrix that can be reduced to the size of
//! the first block row. [`detect_structure`] finds such blocks in a single pass
//! over rows that model a convex piecewise linear constraint consecutively.
//! Finding the largest block optimally is NP-hard; [`reduce_independent_set`]
//! and [`brute_force_largest_block`] provide the reduction and an exhaustive
//! oracle for small instances.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetectError {
    #[error("m_min must be at least 2 (got {0})")]
    MinRowsTooSmall(usize),
    #[error("j_max must be at least 1")]
    MaxNonzerosTooSmall,
    #[error("graph needs at least two vertices")]
    EmptyGraph,
    #[error("graph edge ({0}, {1}) is a self-loop or out of range")]
    BadEdge(usize, usize),
    #[error("duplicate graph edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("exhaustive search limited to {limit} rows, matrix has {rows}")]
    TooLarge { rows: usize, limit: usize },
    #[error("matrix has no columns")]
    NoColumns,
}

/// Tuning knobs of the greedy pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionParams {
    /// Minimum number of rows for a block to be kept.
    pub m_min: usize,
    /// Rows with more nonzeros than this never join a block.
    pub j_max: usize,
    /// Only keep blocks whose coupling columns carry a nonzero.
    pub require_nonzero_coupling: bool,
}

impl Default for DetectionParams {
    fn default() -> Self {
        DetectionParams {
            m_min: 3,
            j_max: 10,
            require_nonzero_coupling: false,
        }
    }
}

impl DetectionParams {
    pub fn new(
        m_min: usize,
        j_max: usize,
        require_nonzero_coupling: bool,
    ) -> Result<Self, DetectError> {
        let p = DetectionParams {
            m_min,
            j_max,
            require_nonzero_coupling,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        if self.m_min < 2 {
            return Err(DetectError::MinRowsTooSmall(self.m_min));
        }
        if self.j_max < 1 {
            return Err(DetectError::MaxNonzerosTooSmall);
        }
        Ok(())
    }

    /// Parameters used when the structure is going to be exploited by the
    /// solver.
    pub fn for_solver() -> Self {
        DetectionParams {
            require_nonzero_coupling: true,
            ..Self::default()
        }
    }
}

/// One eliminable block: its rows, its diagonal block columns and the
/// coupling columns it shares with the first block row. Indices are 0-based
/// and sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub rows: Vec<usize>,
    pub diag_cols: Vec<usize>,
    pub coupling_cols: Vec<usize>,
}

/// Partition of the rows of an `n_rows × n_cols` matrix into a first block
/// row and `blocks.len()` eliminable blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStructure {
    pub n_rows: usize,
    pub n_cols: usize,
    pub blocks: Vec<Block>,
}

impl BlockStructure {
    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        BlockStructure {
            n_rows,
            n_cols,
            blocks: Vec::new(),
        }
    }

    /// Number of block rows, counting the first one.
    pub fn k_blocks(&self) -> usize {
        1 + self.blocks.len()
    }

    pub fn block_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.rows.len()).sum()
    }

    /// Dimension of the reduced normal system.
    pub fn m1(&self) -> usize {
        self.n_rows - self.block_rows()
    }

    /// Fraction of the normal-equation dimension that is eliminated.
    pub fn reduction_fraction(&self) -> f64 {
        if self.n_rows == 0 {
            0.0
        } else {
            self.block_rows() as f64 / self.n_rows as f64
        }
    }

    /// Rows of the first block row, in increasing order.
    pub fn first_rows(&self) -> Vec<usize> {
        let mut in_block = vec![false; self.n_rows];
        for b in &self.blocks {
            for &r in &b.rows {
                in_block[r] = true;
            }
        }
        (0..self.n_rows).filter(|&r| !in_block[r]).collect()
    }

    /// Per block, the columns outside its diagonal block that carry a nonzero
    /// in its rows: the nonzero columns of `Ak1`.
    pub fn coupling_support(&self, a: &SparseMatrix) -> Vec<Vec<usize>> {
        let mut diag_owner = vec![usize::MAX; self.n_cols];
        for (k, b) in self.blocks.iter().enumerate() {
            for &c in &b.diag_cols {
                diag_owner[c] = k;
            }
        }
        self.blocks
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let cols: BTreeSet<usize> = b
                    .rows
                    .iter()
                    .flat_map(|&r| a.row_cols(r).iter().copied())
                    .filter(|&c| diag_owner[c] != k)
                    .collect();
                cols.into_iter().collect()
            })
            .collect()
    }

    /// `pₖ` for each block.
    pub fn coupling_ranks(&self, a: &SparseMatrix) -> Vec<usize> {
        self.coupling_support(a).iter().map(Vec::len).collect()
    }

    pub fn any_nonzero_coupling(&self, a: &SparseMatrix) -> bool {
        self.coupling_ranks(a).iter().any(|&p| p > 0)
    }

    /// Drops blocks that the reduced solver cannot eliminate: rows without a
    /// nonzero in their diagonal block make `Ek Wk Ekᵀ` singular.
    pub fn retain_reducible(&mut self, a: &SparseMatrix) {
        self.blocks.retain(|b| {
            b.rows.iter().all(|&r| {
                a.row_cols(r)
                    .iter()
                    .any(|c| b.diag_cols.binary_search(c).is_ok())
            })
        });
    }
}

/// Coupling column set of the block under construction. Contiguous sets are
/// kept as an interval so membership costs two comparisons.
#[derive(Debug, Clone, PartialEq, Eq)]
enum CouplingSet {
    Interval { lo: usize, hi: usize },
    Sorted(Vec<usize>),
}

impl CouplingSet {
    fn from_sorted(cols: Vec<usize>) -> Self {
        match (cols.first(), cols.last()) {
            (Some(&lo), Some(&hi)) if hi - lo + 1 == cols.len() => CouplingSet::Interval { lo, hi },
            _ => CouplingSet::Sorted(cols),
        }
    }

    fn contains(&self, c: usize) -> bool {
        match self {
            CouplingSet::Interval { lo, hi } => *lo <= c && c <= *hi,
            CouplingSet::Sorted(v) => v.binary_search(&c).is_ok(),
        }
    }

    fn is_empty(&self) -> bool {
        matches!(self, CouplingSet::Sorted(v) if v.is_empty())
    }

    fn to_vec(&self) -> Vec<usize> {
        match self {
            CouplingSet::Interval { lo, hi } => (*lo..=*hi).collect(),
            CouplingSet::Sorted(v) => v.clone(),
        }
    }
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

struct Attempt {
    id: u32,
    rows: Vec<usize>,
    diag: Vec<usize>,
    coupling: CouplingSet,
}

/// Single greedy pass over consecutive rows.
///
/// Two consecutive rows with at most `j_max` nonzeros open a block whose
/// coupling columns are the columns shared by both rows. Following rows join
/// while they meet the coupling columns, share no other column with the
/// previous row, and add only columns not yet used by the block. When a row
/// does not fit, the block is kept if it has at least `m_min` rows and uses
/// no column of an earlier block; otherwise it is discarded.
pub fn detect_structure(a: &SparseMatrix, params: &DetectionParams) -> BlockStructure {
    let m = a.n_rows();
    let n = a.n_cols();
    let mut out = BlockStructure::empty(m, n);
    if m < 2 {
        return out;
    }
    let mut in_block = vec![false; m];
    let mut used = vec![false; n];
    // Column -> attempt id that has it in its diagonal set.
    let mut diag_mark = vec![0u32; n];
    let mut cur = Attempt {
        id: 1,
        rows: Vec::new(),
        diag: Vec::new(),
        coupling: CouplingSet::Sorted(Vec::new()),
    };

    let close =
        |cur: &mut Attempt, out: &mut BlockStructure, in_block: &mut [bool], used: &mut [bool]| {
            if cur.rows.len() >= params.m_min
                && !(params.require_nonzero_coupling && cur.coupling.is_empty())
            {
                let coupling = cur.coupling.to_vec();
                let clash = cur.diag.iter().chain(coupling.iter()).any(|&c| used[c]);
                if !clash {
                    for &c in cur.diag.iter().chain(coupling.iter()) {
                        used[c] = true;
                    }
                    for &r in &cur.rows {
                        in_block[r] = true;
                    }
                    let mut diag = std::mem::take(&mut cur.diag);
                    diag.sort_unstable();
                    out.blocks.push(Block {
                        rows: std::mem::take(&mut cur.rows),
                        diag_cols: diag,
                        coupling_cols: coupling,
                    });
                }
            }
            cur.id += 1;
            cur.rows.clear();
            cur.diag.clear();
            cur.coupling = CouplingSet::Sorted(Vec::new());
        };

    for i in 1..m {
        let prev = a.row_cols(i - 1);
        let row = a.row_cols(i);
        let candidate = row.len() <= params.j_max && prev.len() <= params.j_max && !in_block[i - 1];
        if !candidate {
            close(&mut cur, &mut out, &mut in_block, &mut used);
            continue;
        }
        if cur.rows.is_empty() {
            let shared = intersect_sorted(prev, row);
            cur.coupling = CouplingSet::from_sorted(shared);
            for &c in prev.iter().chain(row.iter()) {
                if !cur.coupling.contains(c) && diag_mark[c] != cur.id {
                    diag_mark[c] = cur.id;
                    cur.diag.push(c);
                }
            }
            cur.rows.extend([i - 1, i]);
            continue;
        }
        let shared_ok = intersect_sorted(prev, row)
            .iter()
            .all(|&c| cur.coupling.contains(c));
        let meets_coupling =
            cur.coupling.is_empty() || row.iter().any(|&c| cur.coupling.contains(c));
        let fresh_ok = row
            .iter()
            .filter(|&&c| !cur.coupling.contains(c))
            .all(|&c| diag_mark[c] != cur.id);
        if shared_ok && meets_coupling && fresh_ok {
            for &c in row {
                if !cur.coupling.contains(c) {
                    diag_mark[c] = cur.id;
                    cur.diag.push(c);
                }
            }
            cur.rows.push(i);
        } else {
            close(&mut cur, &mut out, &mut in_block, &mut used);
        }
    }
    close(&mut cur, &mut out, &mut in_block, &mut used);
    out
}

/// Set-based transcription of the same pass, kept as a reference for the
/// optimized [`detect_structure`].
pub fn detect_structure_reference(a: &SparseMatrix, params: &DetectionParams) -> BlockStructure {
    let m = a.n_rows();
    let rows: Vec<BTreeSet<usize>> = (0..m)
        .map(|i| a.row_cols(i).iter().copied().collect())
        .collect();
    let mut out = BlockStructure::empty(m, a.n_cols());
    let mut detected: BTreeSet<usize> = BTreeSet::new();
    let mut prev_block: BTreeSet<usize> = BTreeSet::new();
    let mut ik: BTreeSet<usize> = BTreeSet::new();
    let mut ek: BTreeSet<usize> = BTreeSet::new();
    let mut mk: BTreeSet<usize> = BTreeSet::new();

    let close = |ik: &mut BTreeSet<usize>,
                 ek: &mut BTreeSet<usize>,
                 mk: &mut BTreeSet<usize>,
                 detected: &mut BTreeSet<usize>,
                 prev_block: &mut BTreeSet<usize>,
                 out: &mut BlockStructure| {
        let cols: BTreeSet<usize> = ek.union(mk).copied().collect();
        let coupling_ok = !params.require_nonzero_coupling || !mk.is_empty();
        if ik.len() >= params.m_min && coupling_ok && cols.is_disjoint(detected) {
            detected.extend(cols);
            *prev_block = ik.clone();
            out.blocks.push(Block {
                rows: ik.iter().copied().collect(),
                diag_cols: ek.iter().copied().collect(),
                coupling_cols: mk.iter().copied().collect(),
            });
        }
        ik.clear();
        ek.clear();
        mk.clear();
    };

    for i in 1..m {
        let (jp, ji) = (&rows[i - 1], &rows[i]);
        if ji.len() <= params.j_max && jp.len() <= params.j_max && !prev_block.contains(&(i - 1)) {
            if ik.is_empty() {
                ik.extend([i - 1, i]);
                mk = jp.intersection(ji).copied().collect();
                ek = jp.union(ji).filter(|c| !mk.contains(c)).copied().collect();
            } else {
                let shared: BTreeSet<usize> = jp.intersection(ji).copied().collect();
                let fresh: BTreeSet<usize> = ji.difference(&mk).copied().collect();
                let meets = mk.is_empty() || !ji.is_disjoint(&mk);
                if shared.is_subset(&mk) && ek.is_disjoint(&fresh) && meets {
                    ik.insert(i);
                    ek.extend(fresh);
                } else {
                    close(
                        &mut ik,
                        &mut ek,
                        &mut mk,
                        &mut detected,
                        &mut prev_block,
                        &mut out,
                    );
                }
            }
        } else {
            close(
                &mut ik,
                &mut ek,
                &mut mk,
                &mut detected,
                &mut prev_block,
                &mut out,
            );
        }
    }
    close(
        &mut ik,
        &mut ek,
        &mut mk,
        &mut detected,
        &mut prev_block,
        &mut out,
    );
    out
}

/// Outcome of one structural condition, with the first counterexample found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub passed: bool,
    pub witness: Option<String>,
}

impl Check {
    fn pass() -> Self {
        Check {
            passed: true,
            witness: None,
        }
    }

    fn fail(witness: String) -> Self {
        Check {
            passed: false,
            witness: Some(witness),
        }
    }
}

/// Structural conditions a [`BlockStructure`] must satisfy on its matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Index sets are in range, sorted and pairwise disjoint.
    pub index_sets: Check,
    /// Rows of block k have no nonzero in the diagonal columns of block j ≠ k.
    pub off_diagonal_blocks: Check,
    /// No two rows of a block share a diagonal column, so `Ek Ekᵀ` is diagonal.
    pub diagonal_gram: Check,
    /// Nonzero coupling columns are disjoint across blocks.
    pub coupling_orthogonal: Check,
    /// Every block row has a nonzero in its diagonal columns.
    pub diagonal_nonzero: Check,
}

impl ValidationReport {
    /// The structural conditions (index sets and the three orthogonality
    /// conditions) hold.
    pub fn passed(&self) -> bool {
        self.index_sets.passed
            && self.off_diagonal_blocks.passed
            && self.diagonal_gram.passed
            && self.coupling_orthogonal.passed
    }

    /// The structure can be eliminated by the reduced solver.
    pub fn reducible(&self) -> bool {
        self.passed() && self.diagonal_nonzero.passed
    }

    pub fn first_failure(&self) -> Option<(&'static str, &str)> {
        [
            ("index_sets", &self.index_sets),
            ("off_diagonal_blocks", &self.off_diagonal_blocks),
            ("diagonal_gram", &self.diagonal_gram),
            ("coupling_orthogonal", &self.coupling_orthogonal),
            ("diagonal_nonzero", &self.diagonal_nonzero),
        ]
        .into_iter()
        .find(|(_, c)| !c.passed)
        .map(|(name, c)| (name, c.witness.as_deref().unwrap_or("")))
    }
}

fn check_index_sets(a: &SparseMatrix, s: &BlockStructure) -> Check {
    if s.n_rows != a.n_rows() || s.n_cols != a.n_cols() {
        return Check::fail(format!(
            "structure is for a {}x{} matrix, matrix is {}x{}",
            s.n_rows,
            s.n_cols,
            a.n_rows(),
            a.n_cols()
        ));
    }
    let mut row_owner = vec![usize::MAX; s.n_rows];
    let mut diag_owner = vec![usize::MAX; s.n_cols];
    for (k, b) in s.blocks.iter().enumerate() {
        for (name, set, bound) in [
            ("rows", &b.rows, s.n_rows),
            ("diag_cols", &b.diag_cols, s.n_cols),
            ("coupling_cols", &b.coupling_cols, s.n_cols),
        ] {
            if let Some(&bad) = set.iter().find(|&&i| i >= bound) {
                return Check::fail(format!("block {k}: {name} index {bad} out of range"));
            }
            if set.windows(2).any(|w| w[0] >= w[1]) {
                return Check::fail(format!("block {k}: {name} not strictly increasing"));
            }
        }
        if b.rows.is_empty() {
            return Check::fail(format!("block {k} has no rows"));
        }
        for &r in &b.rows {
            if row_owner[r] != usize::MAX {
                return Check::fail(format!("row {r} in blocks {} and {k}", row_owner[r]));
            }
            row_owner[r] = k;
        }
        for &c in &b.diag_cols {
            if diag_owner[c] != usize::MAX {
                return Check::fail(format!(
                    "column {c} in diagonal sets of blocks {} and {k}",
                    diag_owner[c]
                ));
            }
            diag_owner[c] = k;
        }
    }
    for (k, b) in s.blocks.iter().enumerate() {
        if let Some(&c) = b
            .coupling_cols
            .iter()
            .find(|&&c| diag_owner[c] != usize::MAX)
        {
            return Check::fail(format!(
                "coupling column {c} of block {k} is a diagonal column of block {}",
                diag_owner[c]
            ));
        }
    }
    Check::pass()
}

/// Checks the structural conditions on the nonzero pattern of `a`.
pub fn validate_structure(a: &SparseMatrix, s: &BlockStructure) -> ValidationReport {
    let index_sets = check_index_sets(a, s);
    if !index_sets.passed {
        let skipped = || Check::fail("index sets invalid".to_string());
        return ValidationReport {
            index_sets,
            off_diagonal_blocks: skipped(),
            diagonal_gram: skipped(),
            coupling_orthogonal: skipped(),
            diagonal_nonzero: skipped(),
        };
    }
    let mut diag_owner = vec![usize::MAX; s.n_cols];
    for (k, b) in s.blocks.iter().enumerate() {
        for &c in &b.diag_cols {
            diag_owner[c] = k;
        }
    }

    let mut off_diagonal_blocks = Check::pass();
    let mut diagonal_gram = Check::pass();
    let mut diagonal_nonzero = Check::pass();
    let mut col_row = vec![usize::MAX; s.n_cols];
    'blocks: for (k, b) in s.blocks.iter().enumerate() {
        for &r in &b.rows {
            let mut has_diag = false;
            for &c in a.row_cols(r) {
                let owner = diag_owner[c];
                if owner == k {
                    has_diag = true;
                    if diagonal_gram.passed && col_row[c] != usize::MAX {
                        diagonal_gram = Check::fail(format!(
                            "block {k}: rows {} and {r} share diagonal column {c}",
                            col_row[c]
                        ));
                    }
                    col_row[c] = r;
                } else if owner != usize::MAX && off_diagonal_blocks.passed {
                    off_diagonal_blocks = Check::fail(format!(
                        "row {r} of block {k} has a nonzero in column {c} of block {owner}"
                    ));
                }
            }
            if !has_diag && diagonal_nonzero.passed {
                diagonal_nonzero = Check::fail(format!(
                    "row {r} of block {k} has no nonzero in its diagonal columns"
                ));
            }
            if !off_diagonal_blocks.passed && !diagonal_gram.passed && !diagonal_nonzero.passed {
                break 'blocks;
            }
        }
    }

    let mut coupling_orthogonal = Check::pass();
    let mut coupling_owner = vec![usize::MAX; s.n_cols];
    'support: for (k, cols) in s.coupling_support(a).into_iter().enumerate() {
        for c in cols {
            // Columns of other diagonal blocks are reported by the first check.
            if diag_owner[c] != usize::MAX {
                continue;
            }
            if coupling_owner[c] != usize::MAX {
                coupling_orthogonal = Check::fail(format!(
                    "coupling column {c} carries nonzeros of blocks {} and {k}",
                    coupling_owner[c]
                ));
                break 'support;
            }
            coupling_owner[c] = k;
        }
    }

    ValidationReport {
        index_sets,
        off_diagonal_blocks,
        diagonal_gram,
        coupling_orthogonal,
        diagonal_nonzero,
    }
}

/// Simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n_vertices: usize, edges: &[(usize, usize)]) -> Result<Self, DetectError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u == v || u >= n_vertices || v >= n_vertices {
                return Err(DetectError::BadEdge(u, v));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(DetectError::DuplicateEdge(u, v));
            }
            out.push(e);
        }
        Ok(Graph {
            n_vertices,
            edges: out,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// Encodes an independent-set instance as a largest-block instance: one row
/// per vertex, an all-ones first column, and one column per edge with ones at
/// its two endpoints.
pub fn reduce_independent_set(g: &Graph) -> Result<SparseMatrix, DetectError> {
    if g.n_vertices < 2 {
        return Err(DetectError::EmptyGraph);
    }
    let mut entries: Vec<(usize, usize, f64)> = (0..g.n_vertices).map(|i| (i, 0, 1.0)).collect();
    for (j, &(u, v)) in g.edges.iter().enumerate() {
        entries.push((u, j + 1, 1.0));
        entries.push((v, j + 1, 1.0));
    }
    Ok(
        SparseMatrix::from_triplets(g.n_vertices, g.edges.len() + 1, &entries)
            .expect("indices in range by construction"),
    )
}

/// Maximizer of the largest-block problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LargestBlock {
    pub rows: Vec<usize>,
    pub q: usize,
    pub size: usize,
}

pub const BRUTE_FORCE_ROW_LIMIT: usize = 20;

/// Exhaustive search for the largest row set `I` and exempt column `q` such
/// that every other column has at most one nonzero among the rows of `I`.
/// Ties go to the smallest `q`, then the lexicographically smallest `I`.
pub fn brute_force_largest_block(b: &SparseMatrix) -> Result<LargestBlock, DetectError> {
    let m = b.n_rows();
    if m > BRUTE_FORCE_ROW_LIMIT {
        return Err(DetectError::TooLarge {
            rows: m,
            limit: BRUTE_FORCE_ROW_LIMIT,
        });
    }
    let n = b.n_cols();
    if n == 0 {
        return Err(DetectError::NoColumns);
    }
    let mut col_mask = vec![0u32; n];
    for (i, j, _) in b.triplets() {
        col_mask[j] |= 1 << i;
    }

    // For ordering equal-size sets: the set holding the lowest differing
    // element is lexicographically smaller.
    let lex_less = |a: u32, c: u32| {
        let diff = a ^ c;
        diff != 0 && a & (diff & diff.wrapping_neg()) != 0
    };

    let mut best: Option<(usize, usize, u32)> = None;
    for mask in 0u32..(1u32 << m) {
        let size = mask.count_ones() as usize;
        if let Some((bs, _, _)) = best {
            if size < bs {
                continue;
            }
        }
        let mut conflict = None;
        let mut feasible = true;
        for (j, &cm) in col_mask.iter().enumerate() {
            if (mask & cm).count_ones() > 1 {
                if conflict.is_some() {
                    feasible = false;
                    break;
                }
                conflict = Some(j);
            }
        }
        if !feasible {
            continue;
        }
        let q = conflict.unwrap_or(0);
        let better = match best {
            None => true,
            Some((bs, bq, bm)) => {
                size > bs || (size == bs && (q < bq || (q == bq && lex_less(mask, bm))))
            }
        };
        if better {
            best = Some((size, q, mask));
        }
    }
    let (size, q, mask) = best.expect("the empty set is always feasible");
    Ok(LargestBlock {
        rows: (0..m).filter(|&i| mask & (1 << i) != 0).collect(),
        q,
        size,
    })
}
