mod bench;
mod error;
mod generate;
mod input;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blockipm::detect::DetectionParams;
use blockipm::ipm::{Backend, IpmOptions};
use clap::{Args, Parser, Subcommand};

use error::CliError;

/// Structure-exploiting interior point LP solver.
#[derive(Debug, Parser)]
#[command(name = "blockipm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect eliminable blocks in one problem.
    Detect {
        input: PathBuf,
        #[command(flatten)]
        detection: DetectionArgs,
        /// Analyse the LP dual instead of the problem itself.
        #[arg(long)]
        dualize: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one problem.
    Solve {
        input: PathBuf,
        #[command(flatten)]
        detection: DetectionArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Solve the LP dual instead of the problem itself.
        #[arg(long)]
        dualize: bool,
        /// Include the primal and dual vectors in the report.
        #[arg(long)]
        with_solution: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write one JSON object per iteration, to PATH or to stderr.
        #[arg(long, value_name = "PATH", num_args = 0..=1)]
        log_iterations: Option<Option<PathBuf>>,
    },
    /// Write a generated instance as instance JSON.
    Gen(generate::GenArgs),
    /// Time Newton directions with both backends on a growing block.
    Bench(bench::BenchArgs),
    /// Detect structure over files and directories of problems.
    Survey {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        detection: DetectionArgs,
        /// Analyse only the LP duals.
        #[arg(long, conflicts_with = "both")]
        dualize: bool,
        /// Analyse every problem and its dual.
        #[arg(long)]
        both: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct DetectionArgs {
    /// Smallest block kept.
    #[arg(long)]
    mmin: Option<usize>,
    /// Rows with more nonzeros never join a block.
    #[arg(long)]
    jmax: Option<usize>,
    /// Drop blocks whose coupling columns are all zero.
    #[arg(long)]
    require_coupling: bool,
}

impl DetectionArgs {
    fn params(&self, base: DetectionParams) -> Result<DetectionParams, CliError> {
        DetectionParams::new(
            self.mmin.unwrap_or(base.m_min),
            self.jmax.unwrap_or(base.j_max),
            self.require_coupling || base.require_nonzero_coupling,
        )
        .map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Primal, dual and complementarity tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value = "auto")]
    backend: Backend,
    /// Static regularization added to the normal-matrix diagonal.
    #[arg(long, default_value_t = 0.0)]
    reg: f64,
}

impl SolverArgs {
    fn options(&self, detection: DetectionParams) -> IpmOptions {
        IpmOptions {
            eps_p: self.tol,
            eps_d: self.tol,
            eps_c: self.tol,
            max_iter: self.max_iter,
            backend: self.backend,
            regularization: self.reg,
            detection,
            ..IpmOptions::default()
        }
    }
}

/// Writes `text` plus a newline to `out`, or to stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(|e| CliError::io(path, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Detect { input, detection, dualize, out } => {
            let params = detection.params(DetectionParams::default())?;
            let entry = report::detect_file(&input, dualize, &params)?;
            emit(out.as_deref(), &report::to_json(&entry))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve { input, detection, solver, dualize, with_solution, out, log_iterations } => {
            let opts = solver.options(detection.params(DetectionParams::for_solver())?);
            let summary = report::solve_file(&input, dualize, &opts)?;
            if let Some(target) = log_iterations {
                report::write_log(target.as_deref(), &summary.report.log)?;
            }
            eprintln!("{}", summary.headline());
            let code = summary.exit_code();
            emit(out.as_deref(), &report::to_json(&summary.output(with_solution)))?;
            Ok(ExitCode::from(code))
        }
        Command::Gen(args) => {
            let lp = generate::generate(&args)?;
            emit(args.out.as_deref(), &lp.to_json())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench(args) => {
            let result = bench::run(&args)?;
            emit(args.out.as_deref(), &report::to_json(&result))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Survey { inputs, detection, dualize, both, out } => {
            let params = detection.params(DetectionParams::default())?;
            let variants = match (dualize, both) {
                (_, true) => vec![false, true],
                (true, false) => vec![true],
                (false, false) => vec![false],
            };
            let survey = report::survey(&inputs, &variants, &params)?;
            emit(out.as_deref(), &report::to_json(&survey))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(error::EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
