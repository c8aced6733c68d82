use alloc::string::String;

use crate::quaternionic::Axis;

/// Errors raised by the algebraic core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },

    #[error("degree {degree} exceeds ambient dimension {dim}")]
    DegreeOverflow { degree: usize, dim: usize },

    #[error("unsupported dimension {dim}: must be even and at most {max}")]
    UnsupportedDimension { dim: usize, max: usize },

    #[error("quaternionic dimension k = {k} out of range 1..={max}")]
    QuaternionicDimension { k: usize, max: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("blade indices must be strictly increasing")]
    NonCanonicalBlade,

    #[error("matrix is not symmetric (residual {residual:e})")]
    NotSymmetric { residual: f64 },

    #[error("matrix is not skew-symmetric (residual {residual:e})")]
    NotSkew { residual: f64 },

    #[error("metric is not positive definite: eigenvalue {eigenvalue:e}")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("matrix is singular or too ill-conditioned (condition number {condition:e})")]
    Singular { condition: f64 },

    #[error("form {axis} is singular (condition number {condition:e})")]
    SingularForm { axis: Axis, condition: f64 },

    #[error("hard Lefschetz fails on axis {axis}: L^(n-1) is not invertible")]
    LefschetzNotInvertible { axis: Axis },

    #[error("coefficients ({a}, {b}, {c}) are not a unit vector (norm^2 = {norm_sq})")]
    NotUnit { a: f64, b: f64, c: f64, norm_sq: f64 },

    #[error("quaternionic relations fail (worst residual {residual:e}, tolerance {tol:e})")]
    NotQuaternionic { residual: f64, tol: f64 },

    #[error("triple does not satisfy the anticommutation conditions (worst residual {residual:e})")]
    InvalidTriple { residual: f64 },

    #[error("holonomy generator {index} is not unitary (residual {residual:e})")]
    NotUnitary { index: usize, residual: f64 },

    #[error("holonomy generators {i} and {j} do not commute (residual {residual:e})")]
    NotCommuting { i: usize, j: usize, residual: f64 },

    #[error("expected {expected} holonomy generators, found {found}")]
    GeneratorCount { expected: usize, found: usize },

    #[error("rank decision ambiguous: singular value {singular_value:e} within 10x of tolerance {tol:e}")]
    AmbiguousRank { singular_value: f64, tol: f64 },

    #[error("invariant subalgebra is zero-dimensional")]
    EmptyModel,

    #[error("lattice oracle: {0}")]
    Oracle(String),

    #[error("adjoint phase {angle} of generator {axis} is a nonzero multiple of 2*pi/{grid}; the lattice would carry spurious harmonic forms")]
    LatticeResonance { axis: usize, angle: f64, grid: usize },

    #[error("operator of size {rows}x{cols} exceeds the materialization cap")]
    TooLarge { rows: usize, cols: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
