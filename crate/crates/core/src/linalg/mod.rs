//! Sparse linear algebra: CSR storage, Krylov and direct solvers.

mod cholesky;
mod gmres;
mod ilu;
mod lu;
mod ordering;
mod sparse;

pub use cholesky::{spd_factorize, SpdFactorization};
pub use gmres::{gmres, GmresOptions, SolverReport};
pub use ilu::{ilu0, Identity, Ilu0, Jacobi, Preconditioner};
pub use lu::{direct_lu, LuFactorization};
pub use ordering::reverse_cuthill_mckee;
pub use sparse::{CsrMatrix, TripletBuilder};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero pivot in incomplete factorization at row {0}")]
    ZeroPivot(usize),
    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is singular (column {0})")]
    SingularMatrix(usize),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
