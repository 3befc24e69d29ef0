use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the planimm numerics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("grid needs at least 3 nodes per axis, got {nx}x{ny}")]
    GridTooSmall { nx: usize, ny: usize },
    #[error("invalid grid rectangle: {0}")]
    InvalidGrid(&'static str),
    #[error("field grids do not match")]
    GridMismatch,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at node ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("node ({0}, {1}) outside grid")]
    NodeOutOfRange(usize, usize),
    #[error("map is not an immersion: |det| = {min_abs_det:e} at node ({}, {})", node.0, node.1)]
    NotImmersion { min_abs_det: f64, node: (usize, usize) },
    #[error("eigendata is defective (repeated eigenvalue with 1-dimensional eigenspace)")]
    Defective,
    #[error("defective d(J phi) at {} node(s)", .0.len())]
    DefectiveNodes(Vec<(usize, usize)>),
    #[error("metric has imaginary residue {0:e}")]
    ImaginaryResidue(f64),
    #[error("metric not invertible at node ({0}, {1})")]
    SingularMetric(usize, usize),
    #[error("point ({0}, {1}) is not strictly inside the domain")]
    NotInterior(f64, f64),
    #[error("direction vector is zero or non-finite")]
    ZeroDirection,
    #[error("geodesic did not reach the boundary within {0} steps")]
    StepCeiling(usize),
    #[error("geodesic state became non-finite")]
    NonFiniteState,
    #[error("segment length mismatch {mismatch:e} exceeds limit {limit:e}")]
    SegmentInconsistent { mismatch: f64, limit: f64 },
    #[error("boundary corners disagree by {0:e}")]
    CornerMismatch(f64),
    #[error("field deviates from boundary data by {deviation:e} at node ({}, {})", node.0, node.1)]
    BoundaryMismatch { deviation: f64, node: (usize, usize) },
    #[error("prescription incompatible: relative defect {relative_defect:e} >= {threshold:e}")]
    Incompatible { relative_defect: f64, threshold: f64 },
    #[error("immersion lost during iteration (min |det| = {0:e})")]
    ImmersionLost(f64),
    #[error("unknown map `{name}` (known: {known})")]
    UnknownMap { name: String, known: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;
