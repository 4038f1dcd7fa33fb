//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("input is empty: {0}")]
    EmptyInput(&'static str),

    #[error("polyhedron is unbounded")]
    Unbounded,

    #[error("polyhedron is infeasible")]
    Infeasible,

    #[error("polyhedron is not full-dimensional")]
    NotFullDimensional,

    #[error("constraint has zero normal and negative right-hand side (trivially empty)")]
    TriviallyEmptyConstraint,

    #[error("invalid rational literal {0:?}")]
    BadRational(String),

    #[error("vertices must have coordinates 0 or 1")]
    NonZeroOneVertex,

    #[error("suffix width {s} out of range for dimension {d}")]
    SuffixWidthOutOfRange { s: usize, d: usize },

    #[error("disjunctive union piece {index} is unbounded")]
    UnboundedPiece { index: usize },

    #[error("disjunctive union piece {index} is empty")]
    EmptyPiece { index: usize },

    #[error("constant block is not positive semidefinite")]
    ConstantBlockNotPsd,

    #[error("kernel residual {residual:.3e} exceeds tolerance {tol:.3e}; the origin is not interior to the block's feasible region")]
    KernelResidual { residual: f64, tol: f64 },

    #[error("no feasible preimage found for target vertex {index}")]
    PreimageNotFound { index: usize },

    #[error("ellipsoid solver failed: {0}")]
    EllipsoidFailure(String),

    #[error("invalid bound inputs: {0}")]
    InvalidBoundInputs(String),

    #[error("family too large to enumerate: {0}")]
    FamilyTooLarge(String),

    #[error("mixed block sizes in semidefinite formulation")]
    MixedBlockSizes,

    #[error("simplex pivot cap exceeded (internal)")]
    PivotCapExceeded,

    #[error("malformed input: {0}")]
    Malformed(String),
}
