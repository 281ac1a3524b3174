use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cpl::{build_cpl, CplBase, CplSpec, LinearConstraint};
use super::standard::{ColumnOrigin, Provenance, StandardFormLP};
use super::ModelError;
use crate::detect::{Block, BlockStructure};
use crate::linalg::SparseMatrix;

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::BadParams(msg.into())
}

fn finite(values: &[f64], what: &str) -> Result<(), ModelError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(bad(format!("{what} must be finite")))
    }
}

/// Small convex cost models that reduce to one CPL program each.
///
/// Every preset minimizes a cost; the generated instance reports that cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Preset {
    /// Orders `q_t ∈ [0, max_order]`, stock `I_t = Σ_{s≤t} (q_s − d_s)`,
    /// cost `Σ_t max(holding·I_t, −backlog·I_t) + order_cost·Σ_t q_t`.
    Inventory {
        demand: Vec<f64>,
        holding: f64,
        backlog: f64,
        order_cost: f64,
        max_order: f64,
    },
    /// `min ‖Mβ − d‖₁` over `|β_j| ≤ coef_bound`.
    L1Regression {
        design: Vec<Vec<f64>>,
        target: Vec<f64>,
        coef_bound: f64,
    },
    /// Conditional value at risk of the sample losses at level `beta`.
    Cvar { losses: Vec<f64>, beta: f64 },
    /// Maximize total fluence `Σ x_j`, `x ∈ [0, fluence_max]`, while the mean
    /// of a convex overdose penalty stays within `budget`.
    SoftDose {
        dose: Vec<Vec<(usize, f64)>>,
        beamlets: usize,
        threshold: f64,
        budget: f64,
        fluence_max: f64,
    },
}

impl Preset {
    pub const NAMES: [&'static str; 4] = ["inventory", "l1", "cvar", "soft-dose"];

    /// Random instance of the named preset with roughly `size` terms.
    pub fn random(name: &str, size: usize, seed: u64) -> Result<Preset, ModelError> {
        if size == 0 {
            return Err(bad("size must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(match name {
            "inventory" => Preset::Inventory {
                demand: (0..size).map(|_| rng.random_range(0.0..10.0)).collect(),
                holding: 1.0,
                backlog: 4.0,
                order_cost: 0.5,
                max_order: 20.0,
            },
            "l1" => {
                let k = (size / 4).clamp(1, 10);
                let design: Vec<Vec<f64>> = (0..size)
                    .map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect();
                let target = design
                    .iter()
                    .map(|r| r.iter().sum::<f64>() + rng.random_range(-0.5..0.5))
                    .collect();
                Preset::L1Regression {
                    design,
                    target,
                    coef_bound: 10.0,
                }
            }
            "cvar" => Preset::Cvar {
                losses: (0..size).map(|_| rng.random_range(-5.0..5.0)).collect(),
                beta: 0.9,
            },
            "soft-dose" => {
                let beamlets = (size / 5).clamp(2, 20);
                let dose = (0..size)
                    .map(|_| {
                        let mut row = Vec::new();
                        for j in 0..beamlets {
                            if rng.random_bool(0.5) {
                                row.push((j, rng.random_range(0.1..1.0)));
                            }
                        }
                        if row.is_empty() {
                            row.push((rng.random_range(0..beamlets), 1.0));
                        }
                        row
                    })
                    .collect();
                Preset::SoftDose {
                    dose,
                    beamlets,
                    threshold: 1.0,
                    budget: 0.05,
                    fluence_max: 2.0,
                }
            }
            other => return Err(bad(format!("unknown preset '{other}'"))),
        })
    }

    /// The CPL program behind the preset.
    pub fn program(&self) -> Result<(CplBase, CplSpec), ModelError> {
        match self {
            Preset::Inventory {
                demand,
                holding,
                backlog,
                order_cost,
                max_order,
            } => {
                let t = demand.len();
                finite(demand, "demand")?;
                if t == 0
                    || *holding < 0.0
                    || *backlog < 0.0
                    || *order_cost < 0.0
                    || !(*max_order > 0.0)
                    || !max_order.is_finite()
                {
                    return Err(bad(
                        "inventory needs periods, nonnegative costs and a positive order cap",
                    ));
                }
                // y = (q_1..q_T, τ), maximize −τ − order_cost·Σq.
                let mut objective = vec![-order_cost; t];
                objective.push(-1.0);
                let mut base = CplBase::new(objective);
                let total: f64 = demand.iter().map(|d| d.abs()).sum();
                let peak = holding.max(*backlog) * (t as f64 * max_order + total);
                for v in 0..t {
                    base.lower[v] = 0.0;
                    base.upper[v] = *max_order;
                }
                base.lower[t] = 0.0;
                base.upper[t] = t as f64 * peak + 1.0;
                let mut f = Vec::with_capacity(2 * t);
                let mut g = Vec::with_capacity(2 * t);
                let mut cumulative = 0.0;
                for period in 0..t {
                    cumulative += demand[period];
                    f.push((0..=period).map(|s| (s, *holding)).collect());
                    g.push(-holding * cumulative);
                    f.push((0..=period).map(|s| (s, -backlog)).collect());
                    g.push(backlog * cumulative);
                }
                let spec = CplSpec {
                    p: t,
                    l: 2,
                    f,
                    g,
                    bound: 0.0,
                    h: vec![(t, 1.0)],
                    zero_piece: false,
                };
                Ok((base, spec))
            }
            Preset::L1Regression {
                design,
                target,
                coef_bound,
            } => {
                let n = design.len();
                let k = design.first().map_or(0, Vec::len);
                if n == 0 || k == 0 || target.len() != n || design.iter().any(|r| r.len() != k) {
                    return Err(bad(
                        "design must be a nonempty rectangular matrix matching the target",
                    ));
                }
                finite(target, "target")?;
                for r in design {
                    finite(r, "design")?;
                }
                if !(*coef_bound > 0.0) || !coef_bound.is_finite() {
                    return Err(bad("coefficient bound must be positive"));
                }
                let mut objective = vec![0.0; k];
                objective.push(-1.0);
                let mut base = CplBase::new(objective);
                for v in 0..k {
                    base.lower[v] = -coef_bound;
                    base.upper[v] = *coef_bound;
                }
                let spread: f64 = target.iter().map(|d| d.abs()).sum::<f64>()
                    + coef_bound * design.iter().flatten().map(|v| v.abs()).sum::<f64>();
                base.lower[k] = 0.0;
                base.upper[k] = spread + 1.0;
                let mut f = Vec::with_capacity(2 * n);
                let mut g = Vec::with_capacity(2 * n);
                for (row, &d) in design.iter().zip(target) {
                    let pos: Vec<(usize, f64)> = row
                        .iter()
                        .copied()
                        .enumerate()
                        .filter(|e| e.1 != 0.0)
                        .collect();
                    f.push(pos.iter().map(|&(j, v)| (j, -v)).collect());
                    g.push(d);
                    f.push(pos);
                    g.push(-d);
                }
                let spec = CplSpec {
                    p: n,
                    l: 2,
                    f,
                    g,
                    bound: 0.0,
                    h: vec![(k, 1.0)],
                    zero_piece: false,
                };
                Ok((base, spec))
            }
            Preset::Cvar { losses, beta } => {
                let n = losses.len();
                finite(losses, "losses")?;
                if n == 0 || !(*beta >= 0.0 && *beta < 1.0) {
                    return Err(bad("cvar needs samples and a level in [0, 1)"));
                }
                // y = (α, τ); α + κ Σ (ξ_s − α)⁺ ≤ τ with κ = 1 / ((1 − β) N).
                let kappa = 1.0 / ((1.0 - beta) * n as f64);
                let lo = losses.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut base = CplBase::new(vec![0.0, -1.0]);
                base.lower[0] = lo - 1.0;
                base.upper[0] = hi + 1.0;
                base.lower[1] = lo - 1.0;
                base.upper[1] = hi + 1.0 + kappa * n as f64 * (hi - lo + 2.0);
                let spec = CplSpec {
                    p: n,
                    l: 1,
                    f: vec![vec![(0, -kappa)]; n],
                    g: losses.iter().map(|x| kappa * x).collect(),
                    bound: 0.0,
                    h: vec![(1, 1.0), (0, -1.0)],
                    zero_piece: true,
                };
                Ok((base, spec))
            }
            Preset::SoftDose {
                dose,
                beamlets,
                threshold,
                budget,
                fluence_max,
            } => {
                let n = dose.len();
                if n == 0
                    || *beamlets == 0
                    || dose
                        .iter()
                        .flatten()
                        .any(|&(j, v)| j >= *beamlets || !v.is_finite())
                {
                    return Err(bad("dose rows must index existing beamlets"));
                }
                if !(*threshold > 0.0)
                    || !(*budget >= 0.0)
                    || !(*fluence_max > 0.0)
                    || !fluence_max.is_finite()
                    || !budget.is_finite()
                {
                    return Err(bad(
                        "soft-dose needs positive threshold and fluence cap, nonnegative budget",
                    ));
                }
                let mut base = CplBase::new(vec![1.0; *beamlets]);
                base.lower = vec![0.0; *beamlets];
                base.upper = vec![*fluence_max; *beamlets];
                // Penalty max(0, e, 2e − δ, 4e − 3δ) of the excess e = d − u, δ = u/10.
                let delta = threshold / 10.0;
                let slopes = [(1.0, 0.0), (2.0, delta), (4.0, 3.0 * delta)];
                let scale = 1.0 / n as f64;
                let mut f = Vec::with_capacity(3 * n);
                let mut g = Vec::with_capacity(3 * n);
                for row in dose {
                    for &(slope, shift) in &slopes {
                        f.push(row.iter().map(|&(j, v)| (j, scale * slope * v)).collect());
                        g.push(-scale * (slope * threshold + shift));
                    }
                }
                let spec = CplSpec {
                    p: n,
                    l: 3,
                    f,
                    g,
                    bound: *budget,
                    h: Vec::new(),
                    zero_piece: true,
                };
                Ok((base, spec))
            }
        }
    }
}

/// Standard-form instance for a preset; it reports the preset's cost.
pub fn gen_preset(preset: &Preset) -> Result<StandardFormLP, ModelError> {
    let (base, spec) = preset.program()?;
    let mut lp = build_cpl(&base, &[spec])?;
    if !matches!(preset, Preset::SoftDose { .. }) {
        lp.provenance.objective_scale = -1.0;
    }
    Ok(lp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RtRole {
    /// Enters the objective through its weighted maximum dose.
    Objective,
    /// Mean overdose above `upper` and mean underdose below `lower` are capped.
    Constrained,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtStructure {
    pub name: String,
    pub role: RtRole,
    pub voxels: usize,
    pub weight: f64,
    pub lower: f64,
    pub upper: f64,
    /// Voxel dose under unit uniform fluence is drawn from `exposure`.
    pub exposure: (f64, f64),
    /// Voxel positions on the unit interval.
    pub region: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtConfig {
    pub n_beamlets: usize,
    pub structures: Vec<RtStructure>,
    /// Cap on each mean violation.
    pub cap: f64,
    /// Nine shifted dose scenarios instead of one.
    pub robust: bool,
    pub kernel_nnz: usize,
    pub fluence_max: f64,
    pub seed: u64,
}

impl RtConfig {
    pub const PRESCRIPTION: f64 = 60.0;

    /// One target and two organs at risk with about `voxel_rows` auxiliary
    /// rows. Doses are in Gy; uniform fluence [`RtConfig::PRESCRIPTION`] is
    /// strictly feasible.
    pub fn standard(n_beamlets: usize, voxel_rows: usize, robust: bool, seed: u64) -> Self {
        let scenarios = if robust { ROBUST_SHIFTS.len() } else { 1 };
        // Constrained voxels appear in two CPL blocks per scenario.
        let target = (voxel_rows / (6 * scenarios)).max(1);
        RtConfig {
            n_beamlets,
            structures: vec![
                RtStructure {
                    name: "target".into(),
                    role: RtRole::Constrained,
                    voxels: target,
                    weight: 0.0,
                    lower: 0.95 * Self::PRESCRIPTION,
                    upper: 1.07 * Self::PRESCRIPTION,
                    exposure: (1.0, 1.0),
                    region: (0.35, 0.65),
                },
                RtStructure {
                    name: "organ".into(),
                    role: RtRole::Constrained,
                    voxels: 2 * target,
                    weight: 0.0,
                    lower: 0.0,
                    upper: 0.6 * Self::PRESCRIPTION,
                    exposure: (0.1, 0.5),
                    region: (0.0, 1.0),
                },
                RtStructure {
                    name: "serial".into(),
                    role: RtRole::Objective,
                    voxels: target,
                    weight: 1.0,
                    lower: 0.0,
                    upper: f64::INFINITY,
                    exposure: (0.2, 0.8),
                    region: (0.1, 0.4),
                },
            ],
            cap: 0.1,
            robust,
            kernel_nnz: 20,
            fluence_max: 3.0 * Self::PRESCRIPTION,
            seed,
        }
    }
}

const ROBUST_SHIFTS: [f64; 9] = [0.0, -0.02, 0.02, -0.01, 0.01, -0.015, 0.015, -0.005, 0.005];

/// Dose rows of one structure, stacked over scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct RtStructureDose {
    pub name: String,
    pub role: RtRole,
    pub lower: f64,
    pub upper: f64,
    pub weight: f64,
    pub dose: SparseMatrix,
}

#[derive(Debug, Clone)]
pub struct RtInstance {
    pub lp: StandardFormLP,
    pub n_beamlets: usize,
    pub cap: f64,
    pub structures: Vec<RtStructureDose>,
}

impl RtInstance {
    /// `(name, mean overdose, mean underdose)` of each constrained structure.
    pub fn mean_violations(&self, fluence: &[f64]) -> Vec<(String, f64, f64)> {
        self.structures
            .iter()
            .filter(|s| s.role == RtRole::Constrained)
            .map(|s| {
                let d = s
                    .dose
                    .mul_vec(fluence)
                    .expect("fluence has one entry per beamlet");
                let n = d.len() as f64;
                let over = d.iter().map(|v| (v - s.upper).max(0.0)).sum::<f64>() / n;
                let under = d.iter().map(|v| (s.lower - v).max(0.0)).sum::<f64>() / n;
                (s.name.clone(), over, under)
            })
            .collect()
    }
}

fn dose_rows(cfg: &RtConfig, s: &RtStructure, rng: &mut ChaCha8Rng) -> Vec<Vec<(usize, f64)>> {
    let nb = cfg.n_beamlets;
    let k = cfg.kernel_nnz.min(nb);
    let radius = k as f64 / nb as f64;
    let shifts: &[f64] = if cfg.robust {
        &ROBUST_SHIFTS
    } else {
        &ROBUST_SHIFTS[..1]
    };
    let voxels: Vec<(f64, f64)> = (0..s.voxels)
        .map(|_| {
            let pos = rng.random_range(s.region.0..=s.region.1);
            let exposure = if s.exposure.0 < s.exposure.1 {
                rng.random_range(s.exposure.0..=s.exposure.1)
            } else {
                s.exposure.0
            };
            (pos, exposure)
        })
        .collect();
    let mut rows = Vec::with_capacity(voxels.len() * shifts.len());
    for &shift in shifts {
        for &(pos, exposure) in &voxels {
            let at = pos + shift;
            let mut near: Vec<(usize, f64)> = (0..nb)
                .map(|j| (j, ((j as f64 + 0.5) / nb as f64 - at).abs()))
                .collect();
            near.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            near.truncate(k);
            near.sort_by_key(|e| e.0);
            let raw: Vec<(usize, f64)> = near
                .iter()
                .map(|&(j, d)| (j, (1.0 - d / (2.0 * radius)).max(0.05).powi(2)))
                .collect();
            let sum: f64 = raw.iter().map(|e| e.1).sum();
            rows.push(
                raw.into_iter()
                    .map(|(j, v)| (j, exposure * v / sum))
                    .collect(),
            );
        }
    }
    rows
}

/// Synthetic fluence-map optimization instance.
///
/// Dose rows are normalized so that unit uniform fluence delivers each
/// voxel's exposure exactly; with the standard configuration that point is
/// strictly feasible.
pub fn gen_radiotherapy(cfg: &RtConfig) -> Result<RtInstance, ModelError> {
    let nb = cfg.n_beamlets;
    if nb == 0 || cfg.kernel_nnz == 0 || cfg.structures.is_empty() {
        return Err(bad("radiotherapy needs beamlets, a kernel and structures"));
    }
    if !(cfg.cap >= 0.0)
        || !cfg.cap.is_finite()
        || !(cfg.fluence_max > 0.0)
        || !cfg.fluence_max.is_finite()
    {
        return Err(bad("cap must be nonnegative and the fluence cap positive"));
    }
    for s in &cfg.structures {
        let region_ok =
            s.region.0 <= s.region.1 && s.region.0.is_finite() && s.region.1.is_finite();
        let exposure_ok =
            0.0 <= s.exposure.0 && s.exposure.0 <= s.exposure.1 && s.exposure.1.is_finite();
        if s.voxels == 0
            || !region_ok
            || !exposure_ok
            || s.lower.is_nan()
            || s.upper.is_nan()
            || !(s.weight >= 0.0)
        {
            return Err(bad(format!("structure '{}' is malformed", s.name)));
        }
        if s.role == RtRole::Constrained
            && !(s.lower.is_finite() && s.upper.is_finite() && s.lower <= s.upper)
        {
            return Err(bad(format!(
                "constrained structure '{}' needs finite bounds",
                s.name
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let objective_count = cfg
        .structures
        .iter()
        .filter(|s| s.role == RtRole::Objective)
        .count();
    let dim = nb + objective_count;
    let mut objective = vec![0.0; nb];
    let mut specs = Vec::new();
    let mut linear = Vec::new();
    let mut doses = Vec::new();
    for s in &cfg.structures {
        let rows = dose_rows(cfg, s, &mut rng);
        match s.role {
            RtRole::Objective => {
                let z = nb + (objective.len() - nb);
                objective.push(-s.weight);
                for row in &rows {
                    let mut coeffs = row.clone();
                    coeffs.push((z, -1.0));
                    linear.push(LinearConstraint { coeffs, rhs: 0.0 });
                }
            }
            RtRole::Constrained => {
                let n = rows.len() as f64;
                let scaled = |sign: f64| {
                    rows.iter()
                        .map(|r| r.iter().map(|&(j, v)| (j, sign * v / n)).collect())
                        .collect()
                };
                specs.push(CplSpec {
                    p: rows.len(),
                    l: 1,
                    f: scaled(1.0),
                    g: vec![-s.upper / n; rows.len()],
                    bound: cfg.cap,
                    h: Vec::new(),
                    zero_piece: true,
                });
                specs.push(CplSpec {
                    p: rows.len(),
                    l: 1,
                    f: scaled(-1.0),
                    g: vec![s.lower / n; rows.len()],
                    bound: cfg.cap,
                    h: Vec::new(),
                    zero_piece: true,
                });
            }
        }
        let triplets: Vec<(usize, usize, f64)> = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)))
            .collect();
        doses.push(RtStructureDose {
            name: s.name.clone(),
            role: s.role,
            lower: s.lower,
            upper: s.upper,
            weight: s.weight,
            dose: SparseMatrix::from_triplets(rows.len(), nb, &triplets)
                .expect("beamlet indices in range"),
        });
    }
    let mut base = CplBase::new(objective);
    debug_assert_eq!(base.dim, dim);
    base.lower = vec![0.0; dim];
    base.upper = vec![cfg.fluence_max; nb];
    base.upper.resize(dim, cfg.fluence_max * 1.1 + 1.0);
    base.linear = linear;
    let mut lp = build_cpl(&base, &specs)?;
    lp.provenance.objective_scale = -1.0;
    Ok(RtInstance {
        lp,
        n_beamlets: nb,
        cap: cfg.cap,
        structures: doses,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockLowRankConfig {
    pub m1: usize,
    /// `(rows, coupling rank)` per block.
    pub blocks: Vec<(usize, usize)>,
    pub seed: u64,
}

/// Random feasible, bounded instance with a known block structure whose
/// coupling columns have the requested ranks.
///
/// Each block row owns two private columns with one entry in a random
/// first-block row; each coupling column is dense in the first block and in
/// its block. `b = A·1` and `c > 0`.
pub fn gen_block_lowrank(
    cfg: &BlockLowRankConfig,
) -> Result<(StandardFormLP, BlockStructure), ModelError> {
    if cfg.m1 == 0 || cfg.blocks.iter().any(|&(rows, _)| rows == 0) {
        return Err(bad("first block and every block need rows"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m1 = cfg.m1;
    let m = m1 + cfg.blocks.iter().map(|b| b.0).sum::<usize>();
    let mut triplets = Vec::new();
    let mut n = 0;
    let mut col = |entries: Vec<(usize, f64)>, triplets: &mut Vec<(usize, usize, f64)>| {
        triplets.extend(entries.into_iter().map(|(r, v)| (r, n, v)));
        n += 1;
        n - 1
    };
    for r in 0..m1 {
        let mut e = vec![(r, 1.0)];
        for _ in 0..2 {
            let other = rng.random_range(0..m1);
            if other != r && !e.iter().any(|x| x.0 == other) {
                e.push((other, rng.random_range(-0.5..0.5)));
            }
        }
        col(e, &mut triplets);
    }
    let mut blocks = Vec::new();
    let mut row = m1;
    for &(rows, rank) in &cfg.blocks {
        let mut coupling = Vec::with_capacity(rank);
        for _ in 0..rank {
            let e: Vec<(usize, f64)> = (0..m1)
                .chain(row..row + rows)
                .map(|r| (r, rng.random_range(-1.0..1.0)))
                .collect();
            coupling.push(col(e, &mut triplets));
        }
        let mut diag = Vec::with_capacity(2 * rows);
        for r in row..row + rows {
            for _ in 0..2 {
                let first = rng.random_range(0..m1);
                let e = vec![
                    (r, rng.random_range(0.5..1.5)),
                    (first, rng.random_range(-1.0..1.0)),
                ];
                diag.push(col(e, &mut triplets));
            }
        }
        blocks.push(Block {
            rows: (row..row + rows).collect(),
            diag_cols: diag,
            coupling_cols: coupling,
        });
        row += rows;
    }
    let a = SparseMatrix::from_triplets(m, n, &triplets).expect("indices in range by construction");
    let b = a.mul_vec(&vec![1.0; n]).expect("dimensions agree");
    let c = (0..n).map(|_| rng.random_range(1.0..2.0)).collect();
    let lp = StandardFormLP {
        a,
        b,
        c,
        provenance: Provenance {
            columns: (0..n)
                .map(|index| ColumnOrigin::Structural { index })
                .collect(),
            objective_scale: 1.0,
            objective_offset: 0.0,
        },
        cpl_metadata: None,
    };
    Ok((
        lp,
        BlockStructure {
            n_rows: m,
            n_cols: n,
            blocks,
        },
    ))
}
