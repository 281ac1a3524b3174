use std::path::PathBuf;
use std::time::Instant;

use blockipm::ipm::{direction_full, direction_reduced, starting_point_with, ReducedWorkspace};
use blockipm::model::{gen_block_lowrank, BlockLowRankConfig};
use clap::Args;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Rows of the first block.
    #[arg(long, default_value_t = 20)]
    pub m1: usize,
    /// Coupling rank of the eliminated block.
    #[arg(long, default_value_t = 2)]
    pub p2: usize,
    /// Rows of the eliminated block, one measurement per value.
    #[arg(long, value_delimiter = ',', default_value = "1000,2000,4000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Once a full-backend median exceeds this many seconds, larger sizes
    /// skip the full backend.
    #[arg(long, default_value_t = 10.0)]
    pub full_cutoff: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct BenchRow {
    pub m2: usize,
    pub m: usize,
    pub n: usize,
    pub m1: usize,
    /// `‖Δy‖` of the reduced direction.
    pub dy_norm: f64,
    /// `‖Δy_full − Δy_reduced‖ / (1 + ‖Δy_full‖)`, absent when skipped.
    pub dy_difference: Option<f64>,
    pub reduced_ms: f64,
    pub full_ms: Option<f64>,
    pub reduced_samples_ms: Vec<f64>,
    pub full_samples_ms: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub m1: usize,
    pub p2: usize,
    pub repeats: usize,
    pub seed: u64,
    pub rows: Vec<BenchRow>,
}

fn median(samples: &[f64]) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Shortest span one sample may cover; faster calls are batched.
const MIN_SAMPLE_MS: f64 = 20.0;

/// `repeats` per-call timings in ms of `f`. An untimed warm-up call sizes
/// the batch so each sample spans at least `MIN_SAMPLE_MS`.
fn timed<T, E>(repeats: usize, mut f: impl FnMut() -> Result<T, E>) -> Result<(T, Vec<f64>), E> {
    let t = Instant::now();
    let mut last = f()?;
    let once = t.elapsed().as_secs_f64() * 1e3;
    let batch = (MIN_SAMPLE_MS / once.max(1e-6)).ceil().clamp(1.0, 1e6) as usize;
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t = Instant::now();
        for _ in 0..batch {
            last = f()?;
        }
        samples.push(t.elapsed().as_secs_f64() * 1e3 / batch as f64);
    }
    Ok((last, samples))
}

/// Median direction times at the starting point of each instance.
pub fn run(args: &BenchArgs) -> Result<BenchReport, CliError> {
    if args.repeats == 0 || args.sizes.is_empty() || args.m1 == 0 {
        return Err(CliError::Usage("bench needs sizes, m1 > 0 and repeats > 0".into()));
    }
    let solver_err = |e: blockipm::ipm::IpmError| CliError::Solver(e.to_string());
    let mut rows = Vec::new();
    let mut run_full = true;
    for &m2 in &args.sizes {
        let cfg = BlockLowRankConfig {
            m1: args.m1,
            blocks: vec![(m2, args.p2)],
            seed: args.seed,
        };
        let (lp, structure) = gen_block_lowrank(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
        let mut ws = ReducedWorkspace::new(&lp.a, &structure).map_err(solver_err)?;
        let st = starting_point_with(&mut ws, &lp, 0.0).map_err(solver_err)?;

        let (reduced, reduced_samples) = timed(args.repeats, || direction_reduced(&lp, &structure, &st)).map_err(solver_err)?;
        let (full, full_samples) = if run_full {
            let (d, s) = timed(args.repeats, || direction_full(&lp, &st)).map_err(solver_err)?;
            (Some(d), s)
        } else {
            (None, Vec::new())
        };
        let full_ms = (!full_samples.is_empty()).then(|| median(&full_samples));
        if full_ms.is_some_and(|t| t > args.full_cutoff * 1e3) {
            run_full = false;
        }
        let dy_difference = full.map(|f| {
            let diff: Vec<f64> = f.dy.iter().zip(&reduced.dy).map(|(a, b)| a - b).collect();
            norm(&diff) / (1.0 + norm(&f.dy))
        });
        rows.push(BenchRow {
            m2,
            m: lp.m(),
            n: lp.n(),
            m1: structure.m1(),
            dy_norm: norm(&reduced.dy),
            dy_difference,
            reduced_ms: median(&reduced_samples),
            full_ms,
            reduced_samples_ms: reduced_samples,
            full_samples_ms: full_samples,
        });
    }
    Ok(BenchReport {
        m1: args.m1,
        p2: args.p2,
        repeats: args.repeats,
        seed: args.seed,
        rows,
    })
}
