//! Taylor-Hood P2-P1 discretization: dof numbering, quadrature, and
//! assembly of the mass, stiffness, divergence, grad-div and convection
//! operators.
//!
//! Dirichlet conditions are not built into any operator; the time stepper
//! eliminates constrained rows itself.

mod assembly;
mod dofmap;
mod element;
mod field;
mod quadrature;

pub use assembly::{
    assemble_divergence_matrix, assemble_graddiv_on, assemble_load, assemble_mass_on, assemble_stiffness_on,
    pressure_weights, ConvectionAssembler, VelocityPattern,
};
pub use dofmap::{build_dofmap, DofMap};
pub use field::{
    cell_divergence, div_l2_error, eval_pressure, eval_velocity, h1_seminorm_error, interpolate_pressure,
    interpolate_velocity, l2_error, pressure_in_cell, pressure_l2_error, pressure_l2_error_mod_const, velocity_gradient_in_cell,
    velocity_in_cell, FieldVector, Space,
};
pub use quadrature::QuadratureRule;

use thiserror::Error;

use crate::linalg::CsrMatrix;
use crate::mesh::{Mesh, Point};

#[derive(Debug, Error, PartialEq)]
pub enum FemError {
    #[error("field has {got} coefficients, space needs {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// The unconstrained operators of the scheme. `m`, `a` and `g` share one
/// sparsity pattern.
#[derive(Debug, Clone)]
pub struct AssembledOperators {
    pub m: CsrMatrix,
    pub a: CsrMatrix,
    pub g: CsrMatrix,
    /// `Np × 2Ns`.
    pub b: CsrMatrix,
    /// `2Ns × Np`.
    pub bt: CsrMatrix,
    /// `∫ q_i` per pressure dof.
    pub pressure_weights: Vec<f64>,
}

pub fn assemble_mass(mesh: &Mesh, dofmap: &DofMap) -> CsrMatrix {
    assemble_mass_on(mesh, &VelocityPattern::new(dofmap))
}

pub fn assemble_stiffness(mesh: &Mesh, dofmap: &DofMap) -> CsrMatrix {
    assemble_stiffness_on(mesh, &VelocityPattern::new(dofmap))
}

pub fn assemble_graddiv(mesh: &Mesh, dofmap: &DofMap) -> CsrMatrix {
    assemble_graddiv_on(mesh, &VelocityPattern::new(dofmap))
}

pub fn assemble_divergence(mesh: &Mesh, dofmap: &DofMap) -> CsrMatrix {
    assemble_divergence_matrix(mesh, dofmap)
}

pub fn assemble_convection(mesh: &Mesh, dofmap: &DofMap, w: &FieldVector) -> CsrMatrix {
    let pattern = VelocityPattern::new(dofmap);
    ConvectionAssembler::new(mesh, dofmap).assemble(&pattern, w.values())
}

/// Mesh, dofs, and every operator the solvers need, assembled once.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Mesh,
    dofmap: DofMap,
    pattern: VelocityPattern,
    ops: AssembledOperators,
    convection: ConvectionAssembler,
}

impl Discretization {
    pub fn new(mesh: Mesh) -> Self {
        let dofmap = DofMap::new(&mesh);
        let pattern = VelocityPattern::new(&dofmap);
        let b = assemble_divergence_matrix(&mesh, &dofmap);
        let ops = AssembledOperators {
            m: assemble_mass_on(&mesh, &pattern),
            a: assemble_stiffness_on(&mesh, &pattern),
            g: assemble_graddiv_on(&mesh, &pattern),
            bt: b.transpose(),
            b,
            pressure_weights: pressure_weights(&mesh),
        };
        let convection = ConvectionAssembler::new(&mesh, &dofmap);
        Self {
            mesh,
            dofmap,
            pattern,
            ops,
            convection,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    pub fn pattern(&self) -> &VelocityPattern {
        &self.pattern
    }

    pub fn ops(&self) -> &AssembledOperators {
        &self.ops
    }

    pub fn n_velocity(&self) -> usize {
        self.dofmap.n_velocity()
    }

    pub fn n_pressure(&self) -> usize {
        self.dofmap.n_pressure()
    }

    pub fn convection(&self, w: &[f64]) -> CsrMatrix {
        self.convection.assemble(&self.pattern, w)
    }

    pub fn convection_into(&self, w: &[f64], out: &mut CsrMatrix) {
        self.convection.assemble_into(&self.pattern, w, out)
    }

    pub fn load(&self, f: &dyn Fn(Point) -> [f64; 2]) -> Vec<f64> {
        assemble_load(&self.mesh, &self.dofmap, f)
    }

    pub fn interpolate_velocity(&self, f: impl Fn(Point) -> [f64; 2]) -> FieldVector {
        interpolate_velocity(&self.dofmap, f)
    }

    pub fn interpolate_pressure(&self, f: impl Fn(Point) -> f64) -> FieldVector {
        interpolate_pressure(&self.dofmap, f)
    }

    /// Area-weighted mean of a P1 pressure.
    pub fn pressure_mean(&self, p: &[f64]) -> f64 {
        let w = &self.ops.pressure_weights;
        let area: f64 = w.iter().sum();
        w.iter().zip(p).map(|(w, p)| w * p).sum::<f64>() / area
    }
}
