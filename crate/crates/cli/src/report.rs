use std::io::Write;
use std::path::{Path, PathBuf};

use blockipm::detect::{detect_structure, validate_structure, DetectionParams};
use blockipm::ipm::{solve, BackendKind, IpmError, IpmOptions, IterationLog, SolveReport, StructureStats, Timings};
use blockipm::model::StandardFormLP;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::input;

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn variant(dual: bool) -> &'static str {
    if dual {
        "dual"
    } else {
        "primal"
    }
}

/// Detection outcome for one problem.
#[derive(Debug, Clone, Serialize)]
pub struct SurveyEntry {
    pub name: String,
    pub variant: &'static str,
    pub m: usize,
    pub n: usize,
    /// Block rows including the first one.
    pub k: usize,
    pub m1: usize,
    /// `(m − m1) / m`.
    pub reduction: f64,
    pub nonzero_coupling: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockSummary {
    pub rows: usize,
    pub diag_cols: usize,
    pub coupling_cols: usize,
    pub coupling_rank: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectReport {
    #[serde(flatten)]
    pub entry: SurveyEntry,
    /// Every block passed the structural checks.
    pub valid: bool,
    pub blocks: Vec<BlockSummary>,
}

fn analyse(name: String, dual: bool, lp: &StandardFormLP, params: &DetectionParams) -> DetectReport {
    let s = detect_structure(&lp.a, params);
    let ranks = s.coupling_ranks(&lp.a);
    DetectReport {
        entry: SurveyEntry {
            name,
            variant: variant(dual),
            m: lp.m(),
            n: lp.n(),
            k: s.k_blocks(),
            m1: s.m1(),
            reduction: s.reduction_fraction(),
            nonzero_coupling: s.any_nonzero_coupling(&lp.a),
        },
        valid: validate_structure(&lp.a, &s).passed(),
        blocks: s
            .blocks
            .iter()
            .zip(ranks)
            .map(|(b, coupling_rank)| BlockSummary {
                rows: b.rows.len(),
                diag_cols: b.diag_cols.len(),
                coupling_cols: b.coupling_cols.len(),
                coupling_rank,
            })
            .collect(),
    }
}

pub fn detect_file(path: &Path, dual: bool, params: &DetectionParams) -> Result<DetectReport, CliError> {
    let lp = input::load(path, dual)?;
    Ok(analyse(input::problem_name(path), dual, &lp, params))
}

#[derive(Debug, Clone, Serialize)]
pub struct SurveyFailure {
    pub name: String,
    pub variant: &'static str,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurveyAggregates {
    pub analysed: usize,
    pub failed: usize,
    /// Share of analysed problems with at least one block.
    pub structure_fraction: f64,
    /// Share of analysed problems whose reduction is at least one half.
    pub half_reduction_fraction: f64,
    pub nonzero_coupling_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurveyReport {
    pub problems: Vec<SurveyEntry>,
    pub failures: Vec<SurveyFailure>,
    pub aggregates: SurveyAggregates,
}

/// Detects structure in every file under `inputs`, once per requested
/// variant. Files are processed concurrently; output follows input order.
pub fn survey(inputs: &[PathBuf], variants: &[bool], params: &DetectionParams) -> Result<SurveyReport, CliError> {
    let files = input::expand(inputs)?;
    let jobs: Vec<(&PathBuf, bool)> = files.iter().flat_map(|f| variants.iter().map(move |&d| (f, d))).collect();
    let results: Vec<Result<SurveyEntry, SurveyFailure>> = jobs
        .par_iter()
        .map(|&(path, dual)| {
            detect_file(path, dual, params).map(|r| r.entry).map_err(|e| SurveyFailure {
                name: input::problem_name(path),
                variant: variant(dual),
                error: e.to_string(),
            })
        })
        .collect();
    let mut problems = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(e) => problems.push(e),
            Err(f) => failures.push(f),
        }
    }
    let share = |pred: &dyn Fn(&SurveyEntry) -> bool| {
        if problems.is_empty() {
            0.0
        } else {
            problems.iter().filter(|e| pred(e)).count() as f64 / problems.len() as f64
        }
    };
    let aggregates = SurveyAggregates {
        analysed: problems.len(),
        failed: failures.len(),
        structure_fraction: share(&|e| e.k > 1),
        half_reduction_fraction: share(&|e| e.reduction >= 0.5),
        nonzero_coupling_fraction: share(&|e| e.nonzero_coupling),
    };
    Ok(SurveyReport { problems, failures, aggregates })
}

pub struct SolveSummary {
    pub name: String,
    pub dual: bool,
    pub report: SolveReport,
}

#[derive(Debug, Serialize)]
pub struct SolveOutput<'a> {
    pub name: &'a str,
    pub variant: &'static str,
    pub status: String,
    pub exit_code: u8,
    pub objective: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub backend: BackendKind,
    pub structure: &'a StructureStats,
    pub timings: &'a Timings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<&'a [f64]>,
}

impl SolveSummary {
    pub fn exit_code(&self) -> u8 {
        self.report.status.exit_code() as u8
    }

    pub fn headline(&self) -> String {
        let r = &self.report;
        format!(
            "{}: {} objective={:.10e} iterations={} m={} m1={} setup={:.1}ms iterations={:.1}ms total={:.1}ms",
            self.name,
            r.status,
            r.objective,
            r.iterations,
            r.structure.m,
            r.structure.m1,
            r.timings.setup_ms,
            r.timings.iterations_ms,
            r.timings.total_ms,
        )
    }

    pub fn output(&self, with_solution: bool) -> SolveOutput<'_> {
        let r = &self.report;
        SolveOutput {
            name: &self.name,
            variant: variant(self.dual),
            status: r.status.to_string(),
            exit_code: self.exit_code(),
            objective: r.objective,
            primal_objective: r.primal_objective,
            dual_objective: r.dual_objective,
            iterations: r.iterations,
            backend: r.backend,
            structure: &r.structure,
            timings: &r.timings,
            x: with_solution.then_some(&r.x[..]),
            y: with_solution.then_some(&r.y[..]),
        }
    }
}

pub fn solve_file(path: &Path, dual: bool, opts: &IpmOptions) -> Result<SolveSummary, CliError> {
    let lp = input::load(path, dual)?;
    let report = solve(&lp, None, opts).map_err(|e| match e {
        IpmError::BadOption(m) => CliError::Usage(m),
        other => CliError::Solver(other.to_string()),
    })?;
    Ok(SolveSummary {
        name: input::problem_name(path),
        dual,
        report,
    })
}

/// One JSON object per line, to `path` or to stderr.
pub fn write_log(path: Option<&Path>, log: &[IterationLog]) -> Result<(), CliError> {
    let mut text = String::new();
    for entry in log {
        text.push_str(&serde_json::to_string(entry).expect("log entries serialize"));
        text.push('\n');
    }
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => std::io::stderr()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}
