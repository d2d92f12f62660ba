//! Finite element core for the incompressible Navier-Stokes equations in 2D.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: conforming triangulations, structured generators and an ASCII
//!   MSH 2.2 reader/writer.
//! * [`fem`]: Taylor-Hood P2-P1 degrees of freedom, quadrature and sparse
//!   assembly of mass, stiffness, divergence, grad-div and skew-symmetric
//!   convection operators.
//! * [`linalg`]: CSR storage, restarted GMRES with ILU(0), a cached sparse
//!   Cholesky factorization and a banded LU fallback.
//! * [`stepper`]: plain BDF2, monolithic grad-div BDF2 and the modular
//!   two-step grad-div BDF2 scheme.
//! * [`diagnostics`]: discrete norms, run ledgers, the Step-2 energy identity,
//!   the energy stability budget, drag/lift and pressure drop.

pub mod diagnostics;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod stepper;

pub use fem::{AssembledOperators, Discretization, DofMap, FieldVector, Space};
pub use linalg::{CsrMatrix, SolverReport};
pub use mesh::Mesh;

#[cfg(test)]
pub(crate) mod testing;
