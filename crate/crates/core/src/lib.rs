//! Interior point solver for linear programs whose constraint matrix has a
//! block-diagonal-plus-low-rank structure, as produced by epigraph models of
//! convex piecewise linear constraints.

pub mod detect;
pub mod ipm;
pub mod linalg;
pub mod model;
