//! Time stepping for the incompressible Navier-Stokes equations with
//! Taylor-Hood elements.
//!
//! Three schemes share one Step-1 saddle-point solve with the extrapolated
//! convecting field `2uⁿ − uⁿ⁻¹`:
//!
//! * [`Scheme::Plain`]: BDF2 with no stabilization.
//! * [`Scheme::Monolithic`]: BDF2 with the grad-div terms added to Step 1.
//! * [`Scheme::Modular`]: plain Step 1 followed by an SPD grad-div post-solve
//!   `(3/(2Δt))M + (3β/(2Δt) + γ)G`, factorized once per run.

mod dirichlet;
mod run;
mod saddle;
mod step2;

pub use dirichlet::{apply_dirichlet, DirichletConstraints};
pub use run::{run, run_controlled, run_with, RunOutput, StepOutcome, StepTerms, TimeStepper, TimeStepperState};
pub use saddle::SaddleSystem;
pub use step2::Step2Solver;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{GmresOptions, LinalgError};
use crate::mesh::Point;

pub type VectorField = Arc<dyn Fn(Point, f64) -> [f64; 2] + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
/// `grad[c][d] = ∂u_c/∂x_d`.
pub type GradientField = Arc<dyn Fn(Point, f64) -> [[f64; 2]; 2] + Send + Sync>;

#[derive(Debug, Error)]
pub enum StepperError {
    #[error("no boundary data for tag {0:?}")]
    MissingBoundaryData(String),
    #[error("invalid setup: {0}")]
    InvalidSetup(String),
    #[error("linear algebra failure: {0}")]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizationParams {
    /// Grad-div penalty.
    pub gamma: f64,
    /// Rate parameter of the dispersive grad-div term.
    pub beta: f64,
}

impl StabilizationParams {
    pub fn new(gamma: f64, beta: f64) -> Result<Self, StepperError> {
        if !(gamma >= 0.0 && gamma.is_finite()) || !(beta >= 0.0 && beta.is_finite()) {
            return Err(StepperError::InvalidSetup(format!(
                "grad-div parameters must be finite and nonnegative (gamma = {gamma}, beta = {beta})"
            )));
        }
        Ok(Self { gamma, beta })
    }

    pub fn none() -> Self {
        Self { gamma: 0.0, beta: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Plain,
    Monolithic,
    Modular,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Plain => "plain",
            Scheme::Monolithic => "monolithic",
            Scheme::Modular => "modular",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "plain" | "non-stabilized" => Some(Scheme::Plain),
            "monolithic" | "standard" => Some(Scheme::Monolithic),
            "modular" | "mgd" => Some(Scheme::Modular),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A registered exact solution. Its velocity is assumed divergence-free.
#[derive(Clone)]
pub struct ExactSolution {
    pub velocity: VectorField,
    pub gradient: Option<GradientField>,
    pub pressure: Option<ScalarField>,
}

#[derive(Clone)]
pub enum InitialVelocity {
    Field(Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>),
    /// Steady Stokes flow for the boundary data at `t = 0`.
    StokesLift,
}

#[derive(Clone)]
pub struct ProblemSetup {
    pub nu: f64,
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub params: StabilizationParams,
    /// `None` is `f ≡ 0`.
    pub body_force: Option<VectorField>,
    /// Dirichlet data per boundary tag name.
    pub dirichlet: BTreeMap<String, VectorField>,
    /// Data for tags without an explicit entry.
    pub dirichlet_default: Option<VectorField>,
    pub initial: InitialVelocity,
    pub exact: Option<ExactSolution>,
    /// Disables the convection term (Stokes).
    pub convection: bool,
}

impl fmt::Debug for ProblemSetup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSetup")
            .field("nu", &self.nu)
            .field("dt", &self.dt)
            .field("t_final", &self.t_final)
            .field("scheme", &self.scheme)
            .field("params", &self.params)
            .field("body_force", &self.body_force.is_some())
            .field("dirichlet", &self.dirichlet.keys().collect::<Vec<_>>())
            .field("exact", &self.exact.is_some())
            .field("convection", &self.convection)
            .finish()
    }
}

impl ProblemSetup {
    /// Zero force, zero initial data, no boundary data yet.
    pub fn new(nu: f64, dt: f64, t_final: f64, scheme: Scheme, params: StabilizationParams) -> Self {
        Self {
            nu,
            dt,
            t_final,
            scheme,
            params,
            body_force: None,
            dirichlet: BTreeMap::new(),
            dirichlet_default: None,
            initial: InitialVelocity::Field(Arc::new(|_| [0.0, 0.0])),
            exact: None,
            convection: true,
        }
    }

    pub fn with_body_force(mut self, f: impl Fn(Point, f64) -> [f64; 2] + Send + Sync + 'static) -> Self {
        self.body_force = Some(Arc::new(f));
        self
    }

    pub fn with_dirichlet(
        mut self,
        tag: &str,
        g: impl Fn(Point, f64) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        self.dirichlet.insert(tag.to_string(), Arc::new(g));
        self
    }

    pub fn with_dirichlet_default(mut self, g: impl Fn(Point, f64) -> [f64; 2] + Send + Sync + 'static) -> Self {
        self.dirichlet_default = Some(Arc::new(g));
        self
    }

    pub fn with_initial(mut self, u0: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static) -> Self {
        self.initial = InitialVelocity::Field(Arc::new(u0));
        self
    }

    pub fn with_stokes_initial(mut self) -> Self {
        self.initial = InitialVelocity::StokesLift;
        self
    }

    pub fn with_exact(mut self, exact: ExactSolution) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn without_convection(mut self) -> Self {
        self.convection = false;
        self
    }

    /// Number of steps `N = T/Δt`.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), StepperError> {
        let bad = |msg: String| Err(StepperError::InvalidSetup(msg));
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("viscosity must be positive, got {}", self.nu));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("time step must be positive, got {}", self.dt));
        }
        if !(self.t_final >= 2.0 * self.dt * (1.0 - 1e-12)) {
            return bad(format!(
                "final time {} must cover at least two steps of {}",
                self.t_final, self.dt
            ));
        }
        let n = self.t_final / self.dt;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
            return bad(format!("final time {} is not a multiple of the step {}", self.t_final, self.dt));
        }
        StabilizationParams::new(self.params.gamma, self.params.beta)?;
        Ok(())
    }

    pub(crate) fn boundary_data(&self, tag: &str) -> Option<&VectorField> {
        self.dirichlet.get(tag).or(self.dirichlet_default.as_ref())
    }

    pub fn force_at(&self, x: Point, t: f64) -> [f64; 2] {
        self.body_force.as_ref().map_or([0.0, 0.0], |f| f(x, t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearSolver {
    Gmres(GmresOptions),
    /// Banded LU on the full saddle system.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreconditionerKind {
    Ilu0,
    Jacobi,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub linear: LinearSolver,
    pub preconditioner: PreconditionerKind,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            linear: LinearSolver::Gmres(GmresOptions::default()),
            preconditioner: PreconditionerKind::Ilu0,
        }
    }
}

impl SolverSettings {
    pub fn direct() -> Self {
        Self {
            linear: LinearSolver::Direct,
            preconditioner: PreconditionerKind::None,
        }
    }

    pub fn tolerance(&self) -> f64 {
        match self.linear {
            LinearSolver::Gmres(o) => o.tol,
            LinearSolver::Direct => 1e-12,
        }
    }
}

#[cfg(test)]
mod tests;
