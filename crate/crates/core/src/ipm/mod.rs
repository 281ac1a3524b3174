//! Basic primal-dual interior point method for standard-form LPs.
//!
//! Each iteration solves the normal equations `A W Aᵀ Δy = r` with
//! `W = X S⁻¹`, either densely ([`FullNormal`]) or after eliminating the
//! detected blocks ([`ReducedWorkspace`]). Both backends implement
//! [`NormalEquations`] and are interchangeable at every call site.

mod normal;
mod reduced;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use normal::{normal_diagonal_max, BackendKind, FullNormal, NormalEquations};
pub use reduced::ReducedWorkspace;

use crate::detect::{detect_structure, BlockStructure, DetectionParams};
use crate::linalg::{dot, norm2, LinalgError};
use crate::model::StandardFormLP;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IpmError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("A·Aᵀ is numerically singular")]
    SingularGram,
    #[error("normal matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("structure violation: {0}")]
    StructureViolation(String),
    #[error("solve requested before a successful factorization")]
    NotFactored,
    #[error("invalid option: {0}")]
    BadOption(String),
    #[error(transparent)]
    Linalg(LinalgError),
}

impl From<LinalgError> for IpmError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::NotPositiveDefinite { pivot } => IpmError::NotPositiveDefinite { pivot },
            LinalgError::DimensionMismatch { expected, found } => {
                IpmError::DimensionMismatch { expected, found }
            }
            other => IpmError::Linalg(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Full,
    Reduced,
    Auto,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Backend::Full),
            "reduced" => Ok(Backend::Reduced),
            "auto" => Ok(Backend::Auto),
            _ => Err(format!(
                "unknown backend '{s}' (expected full, reduced or auto)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpmOptions {
    pub eps_p: f64,
    pub eps_d: f64,
    pub eps_c: f64,
    pub max_iter: usize,
    pub step_factor: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub backend: Backend,
    /// Added to the normal-matrix diagonal on every factorization.
    pub regularization: f64,
    /// Structure detection used when no structure is supplied.
    pub detection: DetectionParams,
    /// Also solve each Newton system with the other backend and log the
    /// difference in `Δy`.
    pub cross_check: bool,
}

impl Default for IpmOptions {
    fn default() -> Self {
        IpmOptions {
            eps_p: 1e-8,
            eps_d: 1e-8,
            eps_c: 1e-8,
            max_iter: 200,
            step_factor: 0.99995,
            sigma_min: 1e-3,
            sigma_max: 0.5,
            backend: Backend::Auto,
            regularization: 0.0,
            detection: DetectionParams::for_solver(),
            cross_check: false,
        }
    }
}

impl IpmOptions {
    pub fn validate(&self) -> Result<(), IpmError> {
        let bad = |m: &str| Err(IpmError::BadOption(m.to_string()));
        if !(self.step_factor > 0.0 && self.step_factor < 1.0) {
            return bad("step_factor must lie in (0, 1)");
        }
        if !(self.eps_p > 0.0 && self.eps_d > 0.0 && self.eps_c > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.sigma_min > 0.0 && self.sigma_min <= self.sigma_max && self.sigma_max < 1.0) {
            return bad("need 0 < sigma_min <= sigma_max < 1");
        }
        if !(self.regularization >= 0.0) {
            return bad("regularization must be nonnegative");
        }
        self.detection
            .validate()
            .map_err(|e| IpmError::BadOption(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub r_primal: Vec<f64>,
    pub r_dual: Vec<f64>,
    pub r_comp: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpmState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub mu: f64,
    pub r_primal: Vec<f64>,
    pub r_dual: Vec<f64>,
    pub r_comp: Vec<f64>,
}

impl IpmState {
    /// State at `(x, y, s)` with residuals for barrier weight `mu`.
    pub fn new(
        lp: &StandardFormLP,
        x: Vec<f64>,
        y: Vec<f64>,
        s: Vec<f64>,
        mu: f64,
    ) -> Result<Self, IpmError> {
        let mut st = IpmState {
            x,
            y,
            s,
            mu,
            r_primal: Vec::new(),
            r_dual: Vec::new(),
            r_comp: Vec::new(),
        };
        st.refresh(lp)?;
        Ok(st)
    }

    pub fn refresh(&mut self, lp: &StandardFormLP) -> Result<(), IpmError> {
        let r = compute_residuals(lp, self)?;
        self.r_primal = r.r_primal;
        self.r_dual = r.r_dual;
        self.r_comp = r.r_comp;
        Ok(())
    }

    /// Average complementarity `xᵀs / n`.
    pub fn gap(&self) -> f64 {
        if self.x.is_empty() {
            0.0
        } else {
            dot(&self.x, &self.s) / self.x.len() as f64
        }
    }
}

/// `b − Ax`, `c − Aᵀy − s` and `μe − XSe`.
pub fn compute_residuals(lp: &StandardFormLP, st: &IpmState) -> Result<Residuals, IpmError> {
    let (m, n) = (lp.m(), lp.n());
    for (expected, found) in [(n, st.x.len()), (m, st.y.len()), (n, st.s.len())] {
        if expected != found {
            return Err(IpmError::DimensionMismatch { expected, found });
        }
    }
    let ax = lp.a.mul_vec(&st.x)?;
    let aty = lp.a.mul_t_vec(&st.y)?;
    Ok(Residuals {
        r_primal: lp.b.iter().zip(&ax).map(|(b, v)| b - v).collect(),
        r_dual: (0..n).map(|j| lp.c[j] - aty[j] - st.s[j]).collect(),
        r_comp: (0..n).map(|j| st.mu - st.x[j] * st.s[j]).collect(),
    })
}

/// Relative gap below this multiple of the relative infeasibility counts as
/// lagging feasibility.
const LAG_RATIO: f64 = 1e-1;

/// `σ = clamp((gap / prev_gap)³, σ_min, σ_max)`; `σ_max` without history.
pub fn centering_sigma(gap: f64, prev_gap: Option<f64>, opts: &IpmOptions) -> f64 {
    match prev_gap {
        Some(prev) if prev > 0.0 => (gap / prev).powi(3).clamp(opts.sigma_min, opts.sigma_max),
        _ => opts.sigma_max,
    }
}

/// `μ = σ · xᵀs / n`.
pub fn barrier_update(x: &[f64], s: &[f64], sigma: f64) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    sigma * dot(x, s) / x.len() as f64
}

/// Largest `α ≤ 1` keeping `x + αΔx` and `s + αΔs` strictly positive, damped
/// by `factor`.
pub fn step_length(x: &[f64], s: &[f64], dx: &[f64], ds: &[f64], factor: f64) -> f64 {
    let ratio = |v: &[f64], dv: &[f64]| {
        v.iter()
            .zip(dv)
            .filter(|(_, &d)| d < 0.0)
            .map(|(&vi, &d)| -vi / d)
            .fold(f64::INFINITY, f64::min)
    };
    let alpha_max = ratio(x, dx).min(ratio(s, ds));
    (factor * alpha_max).min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub ds: Vec<f64>,
}

/// Right-hand side `r_p + A (W r_d − S⁻¹ r_c)` of the normal equations.
fn normal_rhs(lp: &StandardFormLP, st: &IpmState, w: &[f64]) -> Result<Vec<f64>, IpmError> {
    let t: Vec<f64> = (0..lp.n())
        .map(|j| w[j] * st.r_dual[j] - st.r_comp[j] / st.s[j])
        .collect();
    let at = lp.a.mul_vec(&t)?;
    Ok(st.r_primal.iter().zip(&at).map(|(r, v)| r + v).collect())
}

/// `Δs = r_d − AᵀΔy`, `Δx = S⁻¹ r_c − W Δs`.
fn back_substitute(
    lp: &StandardFormLP,
    st: &IpmState,
    w: &[f64],
    dy: Vec<f64>,
) -> Result<Direction, IpmError> {
    let atdy = lp.a.mul_t_vec(&dy)?;
    let ds: Vec<f64> = st.r_dual.iter().zip(&atdy).map(|(r, v)| r - v).collect();
    let dx = (0..lp.n())
        .map(|j| st.r_comp[j] / st.s[j] - w[j] * ds[j])
        .collect();
    Ok(Direction { dx, dy, ds })
}

fn weights(st: &IpmState) -> Vec<f64> {
    st.x.iter().zip(&st.s).map(|(x, s)| x / s).collect()
}

/// Newton direction using a prepared solver.
pub fn direction_with(
    solver: &mut dyn NormalEquations,
    lp: &StandardFormLP,
    st: &IpmState,
    reg: f64,
) -> Result<Direction, IpmError> {
    let w = weights(st);
    solver.factor(&w, reg)?;
    let rhs = normal_rhs(lp, st, &w)?;
    let dy = refine(solver, lp, &w, reg, &rhs)?;
    back_substitute(lp, st, &w, dy)
}

/// `rhs − (A W Aᵀ + reg·I) dy`.
fn normal_residual(
    lp: &StandardFormLP,
    w: &[f64],
    reg: f64,
    rhs: &[f64],
    dy: &[f64],
) -> Result<Vec<f64>, IpmError> {
    let mut t = lp.a.mul_t_vec(dy)?;
    t.iter_mut().zip(w).for_each(|(v, wj)| *v *= wj);
    let ndy = lp.a.mul_vec(&t)?;
    Ok((0..rhs.len())
        .map(|i| rhs[i] - ndy[i] - reg * dy[i])
        .collect())
}

/// Refinement steps applied to every normal-equation solve.
const REFINE_STEPS: usize = 3;


/// Solves `(A W Aᵀ + reg·I) Δy = rhs` with iterative refinement against the
/// sparse product, keeping the iterate with the smallest residual.
fn refine(
    solver: &dyn NormalEquations,
    lp: &StandardFormLP,
    w: &[f64],
    reg: f64,
    rhs: &[f64],
) -> Result<Vec<f64>, IpmError> {
    let residual = |dy: &[f64]| normal_residual(lp, w, reg, rhs, dy);
    let mut dy = solver.solve(rhs)?;
    let mut r = residual(&dy)?;
    let mut best = norm2(&r);
    let target = 1e-15 * (1.0 + norm2(rhs));
    for _ in 0..REFINE_STEPS {
        if !(best > target) {
            break;
        }
        let corr = solver.solve(&r)?;
        let cand: Vec<f64> = dy.iter().zip(&corr).map(|(a, b)| a + b).collect();
        let r_cand = residual(&cand)?;
        let n = norm2(&r_cand);
        if !(n < best) {
            break;
        }
        dy = cand;
        r = r_cand;
        best = n;
    }
    Ok(dy)
}

/// Newton direction from the dense normal matrix.
pub fn direction_full(lp: &StandardFormLP, st: &IpmState) -> Result<Direction, IpmError> {
    direction_with(&mut FullNormal::new(&lp.a), lp, st, 0.0)
}

/// Newton direction with the blocks of `structure` eliminated.
pub fn direction_reduced(
    lp: &StandardFormLP,
    structure: &BlockStructure,
    st: &IpmState,
) -> Result<Direction, IpmError> {
    direction_with(&mut ReducedWorkspace::new(&lp.a, structure)?, lp, st, 0.0)
}

/// Least-norm solutions of `Ax = b` and `Aᵀy + s = c`, shifted into the
/// positive orthant.
pub fn starting_point(lp: &StandardFormLP) -> Result<IpmState, IpmError> {
    starting_point_with(&mut FullNormal::new(&lp.a), lp, 0.0)
}

pub fn starting_point_with(
    solver: &mut dyn NormalEquations,
    lp: &StandardFormLP,
    reg: f64,
) -> Result<IpmState, IpmError> {
    let ones = vec![1.0; lp.n()];
    match solver.factor(&ones, reg) {
        Ok(()) => {}
        Err(IpmError::NotPositiveDefinite { .. }) => return Err(IpmError::SingularGram),
        Err(e) => return Err(e),
    }
    let v = solver.solve(&lp.b)?;
    let mut x = lp.a.mul_t_vec(&v)?;
    let y = solver.solve(&lp.a.mul_vec(&lp.c)?)?;
    let aty = lp.a.mul_t_vec(&y)?;
    let mut s: Vec<f64> = lp.c.iter().zip(&aty).map(|(c, v)| c - v).collect();
    for v in [&mut x, &mut s] {
        let shift = positive_shift(v);
        v.iter_mut().for_each(|e| *e += shift);
    }
    let mut st = IpmState::new(lp, x, y, s, 0.0)?;
    st.mu = st.gap();
    st.refresh(lp)?;
    Ok(st)
}

/// `max(−1.5·min v, 0) + 0.1·(1 + mean |v|)`.
fn positive_shift(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let mean_abs = v.iter().map(|e| e.abs()).sum::<f64>() / v.len() as f64;
    (-1.5 * min).max(0.0) + 0.1 * (1.0 + mean_abs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    MaxIter,
    NumericalFailure,
    #[serde(rename = "Infeasible-suspected")]
    InfeasibleSuspected,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Optimal => 0,
            Status::MaxIter => 2,
            Status::NumericalFailure => 3,
            Status::InfeasibleSuspected => 4,
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Optimal => "Optimal",
            Status::MaxIter => "MaxIter",
            Status::NumericalFailure => "NumericalFailure",
            Status::InfeasibleSuspected => "Infeasible-suspected",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub mu: f64,
    pub r_p: f64,
    pub r_d: f64,
    pub r_c: f64,
    pub alpha: f64,
    pub backend_ms: f64,
    pub regularization: f64,
    /// `‖Δy_other − Δy‖ / (1 + ‖Δy‖)` when cross-checking.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureStats {
    pub k_blocks: usize,
    pub m: usize,
    pub m1: usize,
    pub sum_p: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub setup_ms: f64,
    pub iterations_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: Status,
    /// Objective of the originating model (through the provenance map).
    pub objective: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub backend: BackendKind,
    pub structure: StructureStats,
    pub timings: Timings,
    pub log: Vec<IterationLog>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Structure actually exploited by the reduced backend.
pub fn solver_structure(
    lp: &StandardFormLP,
    given: Option<&BlockStructure>,
    params: &DetectionParams,
) -> BlockStructure {
    let mut s = match given {
        Some(s) => s.clone(),
        None => detect_structure(&lp.a, params),
    };
    if given.is_none() {
        s.retain_reducible(&lp.a);
    }
    s
}

struct Solvers {
    primary: Box<dyn NormalEquations>,
    other: Option<Box<dyn NormalEquations>>,
}

fn build_solvers(
    lp: &StandardFormLP,
    structure: &BlockStructure,
    opts: &IpmOptions,
) -> Result<(Solvers, StructureStats), IpmError> {
    let use_reduced = match opts.backend {
        Backend::Full => false,
        Backend::Reduced => true,
        Backend::Auto => {
            structure.block_rows() as f64 >= 0.25 * lp.m() as f64 && !structure.blocks.is_empty()
        }
    };
    let reduced = if use_reduced || opts.cross_check {
        Some(ReducedWorkspace::new(&lp.a, structure)?)
    } else {
        None
    };
    let sum_p = reduced
        .as_ref()
        .map_or(0, |r| r.coupling_ranks().iter().sum());
    let stats = StructureStats {
        k_blocks: if use_reduced { structure.k_blocks() } else { 1 },
        m: lp.m(),
        m1: if use_reduced { structure.m1() } else { lp.m() },
        sum_p: if use_reduced { sum_p } else { 0 },
    };
    let full = || Box::new(FullNormal::new(&lp.a)) as Box<dyn NormalEquations>;
    let solvers = match (use_reduced, reduced) {
        (true, Some(r)) => Solvers {
            primary: Box::new(r),
            other: opts.cross_check.then(full),
        },
        (_, r) => Solvers {
            primary: full(),
            other: r.map(|r| Box::new(r) as Box<dyn NormalEquations>),
        },
    };
    Ok((solvers, stats))
}

/// Runs the interior point method.
///
/// Invalid options, mismatched dimensions or an invalid supplied structure
/// are errors; numerical outcomes are reported through [`Status`].
pub fn solve(
    lp: &StandardFormLP,
    structure: Option<&BlockStructure>,
    opts: &IpmOptions,
) -> Result<SolveReport, IpmError> {
    opts.validate()?;
    lp.check().map_err(|e| IpmError::BadOption(e.to_string()))?;
    let t0 = Instant::now();
    let structure = solver_structure(lp, structure, &opts.detection);
    let (mut solvers, stats) = build_solvers(lp, &structure, opts)?;
    let backend = solvers.primary.kind();

    let scale = 1.0 + normal_diagonal_max(&lp.a, &vec![1.0; lp.n()]);
    let mut reg = opts.regularization;
    let mut st = match starting_point_with(solvers.primary.as_mut(), lp, reg) {
        Ok(st) => st,
        Err(IpmError::SingularGram) => {
            reg = escalate(reg, scale);
            match starting_point_with(solvers.primary.as_mut(), lp, reg) {
                Ok(st) => st,
                Err(IpmError::SingularGram) => {
                    return Ok(report(
                        lp,
                        None,
                        Status::NumericalFailure,
                        0,
                        backend,
                        stats,
                        ms(t0),
                        0.0,
                        Vec::new(),
                    ))
                }
                Err(e) => return Err(e),
            }
        }
        Err(e) => return Err(e),
    };
    solvers.primary.set_skip_tiny_pivots(true);
    if let Some(other) = solvers.other.as_mut() {
        other.set_skip_tiny_pivots(true);
    }
    let setup_ms = ms(t0);
    let t_iter = Instant::now();

    let norm_b = norm2(&lp.b);
    let norm_c = norm2(&lp.c);
    let blowup = 1e12 * (1.0 + inf_norm(&lp.b) + inf_norm(&lp.c));
    let mut log = Vec::new();
    let mut prev_gap: Option<f64> = None;
    let mut stalled = 0usize;
    let mut infeasible_streak = 0usize;
    let mut status = None;
    let mut iterations = 0;

    let mut initial: Option<(f64, f64)> = None;
    for it in 0..opts.max_iter {
        let gap = st.gap();
        let (rp, rd) = (norm2(&st.r_primal), norm2(&st.r_dual));
        let infeas = (rp / (1.0 + norm_b)).max(rd / (1.0 + norm_c));
        let &mut (gap0, infeas0) =
            initial.get_or_insert((gap.max(f64::MIN_POSITIVE), infeas.max(f64::MIN_POSITIVE)));
        // Complementarity far ahead of feasibility traps the iterates near the
        // boundary; hold the barrier back until feasibility catches up.
        let sigma = if gap / gap0 < LAG_RATIO * (infeas / infeas0) {
            opts.sigma_max
        } else {
            centering_sigma(gap, prev_gap, opts)
        };
        st.mu = barrier_update(&st.x, &st.s, sigma);
        st.refresh(lp)?;
        let rc = norm2(&st.r_comp);
        let cx = dot(&lp.c, &st.x).abs();
        let xs: f64 =
            st.x.iter()
                .zip(&st.s)
                .map(|(x, s)| (x * s).powi(2))
                .sum::<f64>()
                .sqrt();
        if rp < opts.eps_p * (1.0 + norm_b)
            && rd < opts.eps_d * (1.0 + norm_c)
            && rc < opts.eps_c * (1.0 + cx)
            && xs < opts.eps_c * (1.0 + cx)
        {
            status = Some(Status::Optimal);
            break;
        }
        // Complementarity reached while the residuals stay put.
        let rel_infeas = (rp / (1.0 + norm_b)).max(rd / (1.0 + norm_c));
        infeasible_streak = if xs < opts.eps_c * (1.0 + cx) && rel_infeas > 1e-4 {
            infeasible_streak + 1
        } else {
            0
        };
        if infeasible_streak >= 5 {
            status = Some(Status::InfeasibleSuspected);
            break;
        }

        let tb = Instant::now();
        let mut dir = direction_with(solvers.primary.as_mut(), lp, &st, reg);
        if dir.is_err() {
            reg = escalate(reg, scale.max(normal_diagonal_max(&lp.a, &weights(&st))));
            dir = direction_with(solvers.primary.as_mut(), lp, &st, reg);
        }
        let dir = match dir {
            Ok(d) => d,
            Err(IpmError::NotPositiveDefinite { .. }) | Err(IpmError::StructureViolation(_)) => {
                status = Some(Status::NumericalFailure);
                break;
            }
            Err(e) => return Err(e),
        };
        let backend_ms = ms(tb);
        let cross_check = match solvers.other.as_mut() {
            Some(other) => direction_with(other.as_mut(), lp, &st, reg).ok().map(|d| {
                let diff: Vec<f64> = d.dy.iter().zip(&dir.dy).map(|(a, b)| a - b).collect();
                norm2(&diff) / (1.0 + norm2(&dir.dy))
            }),
            None => None,
        };

        let alpha = step_length(&st.x, &st.s, &dir.dx, &dir.ds, opts.step_factor);
        for (v, d) in [
            (&mut st.x, &dir.dx),
            (&mut st.y, &dir.dy),
            (&mut st.s, &dir.ds),
        ] {
            v.iter_mut().zip(d).for_each(|(a, b)| *a += alpha * b);
        }
        log.push(IterationLog {
            iteration: it,
            mu: st.mu,
            r_p: rp,
            r_d: rd,
            r_c: rc,
            alpha,
            backend_ms,
            regularization: reg,
            cross_check,
        });
        iterations = it + 1;
        prev_gap = Some(gap);

        if inf_norm(&st.x).max(inf_norm(&st.y)).max(inf_norm(&st.s)) > blowup
            || !st.x.iter().all(|v| v.is_finite())
        {
            status = Some(Status::InfeasibleSuspected);
            break;
        }
        stalled = if alpha < 1e-8 { stalled + 1 } else { 0 };
        if stalled >= 5 {
            status = Some(classify_stall(
                lp,
                &st,
                norm_b,
                norm_c,
                Status::NumericalFailure,
            )?);
            break;
        }
    }
    let status = match status {
        Some(s) => s,
        None => classify_stall(lp, &st, norm_b, norm_c, Status::MaxIter)?,
    };
    Ok(report(
        lp,
        Some(st),
        status,
        iterations,
        backend,
        stats,
        setup_ms,
        ms(t_iter),
        log,
    ))
}

fn escalate(reg: f64, scale: f64) -> f64 {
    (reg * 100.0).max(1e-10 * scale)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Large remaining infeasibility at termination suggests an infeasible or
/// unbounded problem rather than slow convergence.
fn classify_stall(
    lp: &StandardFormLP,
    st: &IpmState,
    norm_b: f64,
    norm_c: f64,
    otherwise: Status,
) -> Result<Status, IpmError> {
    let r = compute_residuals(lp, st)?;
    let rel = (norm2(&r.r_primal) / (1.0 + norm_b)).max(norm2(&r.r_dual) / (1.0 + norm_c));
    Ok(if rel > 1e-4 {
        Status::InfeasibleSuspected
    } else {
        otherwise
    })
}

#[allow(clippy::too_many_arguments)]
fn report(
    lp: &StandardFormLP,
    st: Option<IpmState>,
    status: Status,
    iterations: usize,
    backend: BackendKind,
    structure: StructureStats,
    setup_ms: f64,
    iterations_ms: f64,
    log: Vec<IterationLog>,
) -> SolveReport {
    let (x, y, s) = match st {
        Some(st) => (st.x, st.y, st.s),
        None => (vec![0.0; lp.n()], vec![0.0; lp.m()], vec![0.0; lp.n()]),
    };
    SolveReport {
        status,
        objective: lp.reported_objective(&x),
        primal_objective: dot(&lp.c, &x),
        dual_objective: dot(&lp.b, &y),
        iterations,
        backend,
        structure,
        timings: Timings {
            setup_ms,
            iterations_ms,
            total_ms: setup_ms + iterations_ms,
        },
        log,
        x,
        y,
        s,
    }
}
