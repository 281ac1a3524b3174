use std::path::{Path, PathBuf};

use blockipm::model::{
    build_cpl, gen_block_lowrank, gen_preset, gen_radiotherapy, BlockLowRankConfig, CplBase, CplSpec, ModelError,
    Preset, RtConfig, StandardFormLP,
};
use clap::{Args, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(subcommand)]
    pub kind: GenKind,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// One random CPL constraint over a boxed base problem.
    Cpl {
        /// Number of max-terms.
        #[arg(long = "P", default_value_t = 10)]
        p: usize,
        /// Pieces per term.
        #[arg(long = "L", default_value_t = 2)]
        l: usize,
        /// Base variables.
        #[arg(long, default_value_t = 10)]
        dim: usize,
    },
    /// Fluence-map optimization with mean-violation constraints.
    Rt {
        #[arg(long, default_value_t = 50)]
        beamlets: usize,
        /// Auxiliary voxel rows; defaults to 300 per beamlet.
        #[arg(long)]
        voxels: Option<usize>,
        /// Nine shifted dose scenarios.
        #[arg(long)]
        robust: bool,
    },
    /// Least-absolute-deviation regression.
    L1 {
        #[arg(long, default_value_t = 40)]
        size: usize,
        /// Targets lie exactly on the model, so the optimum is zero.
        #[arg(long)]
        consistent: bool,
    },
    /// Inventory with holding and backlog costs.
    Inventory {
        #[arg(long, default_value_t = 20)]
        size: usize,
    },
    /// Conditional value at risk of sampled losses.
    Cvar {
        #[arg(long, default_value_t = 50)]
        size: usize,
    },
    /// Soft overdose budget on a small dose matrix.
    SoftDose {
        #[arg(long, default_value_t = 30)]
        size: usize,
    },
    /// Random instance with one block of rank-`p2` coupling.
    Lowrank {
        #[arg(long, default_value_t = 20)]
        m1: usize,
        #[arg(long, default_value_t = 1000)]
        m2: usize,
        #[arg(long, default_value_t = 2)]
        p2: usize,
    },
}

fn nonzero(rng: &mut ChaCha8Rng) -> f64 {
    let v: f64 = rng.random_range(0.5..2.0);
    if rng.random_bool(0.5) {
        v
    } else {
        -v
    }
}

/// Random dense CPL constraint on `[-10, 10]^dim`, strictly feasible at the
/// origin.
pub fn random_cpl(p: usize, l: usize, dim: usize, seed: u64) -> Result<StandardFormLP, ModelError> {
    if dim == 0 {
        return Err(ModelError::BadParams("dim must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut base = CplBase::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect());
    base.lower = vec![-10.0; dim];
    base.upper = vec![10.0; dim];
    let mut spec = CplSpec {
        p,
        l,
        f: (0..p * l)
            .map(|_| (0..dim).map(|j| (j, nonzero(&mut rng))).collect())
            .collect(),
        g: (0..p * l).map(|_| nonzero(&mut rng)).collect(),
        bound: 0.0,
        h: Vec::new(),
        zero_piece: false,
    };
    if p > 0 && l > 0 {
        spec.bound = spec.sides(&vec![0.0; dim]).0 + 1.0;
    }
    build_cpl(&base, &[spec])
}

fn consistent_l1(size: usize, seed: u64) -> Result<StandardFormLP, ModelError> {
    let mut preset = Preset::random("l1", size, seed)?;
    if let Preset::L1Regression { design, target, .. } = &mut preset {
        *target = design.iter().map(|row| row.iter().sum()).collect();
    }
    gen_preset(&preset)
}

pub fn generate(args: &GenArgs) -> Result<StandardFormLP, CliError> {
    let seed = args.seed;
    let here = Path::new("gen");
    let lp = match &args.kind {
        &GenKind::Cpl { p, l, dim } => random_cpl(p, l, dim, seed),
        &GenKind::Rt { beamlets, voxels, robust } => {
            let cfg = RtConfig::standard(beamlets, voxels.unwrap_or(300 * beamlets), robust, seed);
            gen_radiotherapy(&cfg).map(|inst| inst.lp)
        }
        &GenKind::L1 { size, consistent: true } => consistent_l1(size, seed),
        &GenKind::L1 { size, consistent: false } => Preset::random("l1", size, seed).and_then(|p| gen_preset(&p)),
        &GenKind::Inventory { size } => Preset::random("inventory", size, seed).and_then(|p| gen_preset(&p)),
        &GenKind::Cvar { size } => Preset::random("cvar", size, seed).and_then(|p| gen_preset(&p)),
        &GenKind::SoftDose { size } => Preset::random("soft-dose", size, seed).and_then(|p| gen_preset(&p)),
        &GenKind::Lowrank { m1, m2, p2 } => gen_block_lowrank(&BlockLowRankConfig {
            m1,
            blocks: vec![(m2, p2)],
            seed,
        })
        .map(|(lp, _)| lp),
    };
    lp.map_err(|e| CliError::model(here, e))
}
