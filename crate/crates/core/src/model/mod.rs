//! Problem ingestion and generation.

mod cpl;
mod general;
mod generators;
mod mps;
mod standard;

use thiserror::Error;

pub use cpl::{build_cpl, cpl_holds_via_columns, evaluate_cpl, CplBase, CplSpec, LinearConstraint};
pub use general::{
    dualize, to_standard_form, GeneralLP, ObjSense, Row, RowSense, Standardized, Variable,
};
pub use generators::{
    gen_block_lowrank, gen_preset, gen_radiotherapy, BlockLowRankConfig, Preset, RtConfig,
    RtInstance, RtRole, RtStructure, RtStructureDose,
};
pub use mps::parse_mps;
pub use standard::{ColumnOrigin, CplBlockMeta, Provenance, StandardFormLP};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("instance JSON: {0}")]
    Json(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unsupported {what}")]
    UnsupportedSection { line: usize, what: String },
    #[error("duplicate name: {0}")]
    DuplicateName(String),
    #[error("variable {var} has empty bound interval [{lo}, {hi}]")]
    InfeasibleBounds { var: String, lo: f64, hi: f64 },
    #[error("row {0} has no entries and an unsatisfiable right-hand side")]
    InfeasibleRow(String),
    #[error("bad generator parameters: {0}")]
    BadParams(String),
}
