use thiserror::Error;

/// Errors produced by the numerical routines and file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("cell {cell} has non-positive measure {measure:e}")]
    DegenerateCell { cell: usize, measure: f64 },

    #[error("non-conforming mesh: {0}")]
    NonConforming(String),

    #[error("nodal value at node {node} is zero and cannot be projected to the sphere")]
    ZeroVector { node: usize },

    #[error("inverse transform left an imaginary residue of {residue:e}")]
    ImaginaryResidue { residue: f64 },

    #[error("quadrature order {order} for {rule} is below the minimum {minimum}")]
    QuadratureOrder { rule: &'static str, order: usize, minimum: usize },

    #[error("tangent frame at node {node} is degenerate (|u| = {norm:e} < 1/2)")]
    DegenerateFrame { node: usize, norm: f64 },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("fixed-point iteration is not contracting (difference {difference:e} after {iterations} iterations); reduce the time step")]
    NotContracting { iterations: usize, difference: f64 },

    #[error("fixed-point iteration hit max_iters = {max_iters} (difference {difference:e})")]
    MaxIterations { max_iters: usize, difference: f64 },

    #[error("eigen-decomposition failed: {0}")]
    Eigen(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
