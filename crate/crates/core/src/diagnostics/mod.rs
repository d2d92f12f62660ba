//! Measured quantities: discrete norms, run ledgers, the Step-2 energy
//! identity, the energy stability budget, drag/lift and pressure drop.

mod ledger;

pub use ledger::{
    aggregate_norms, aggregate_series, fmt_f64, Aggregate, ErrorRecord, Quantity, RunLedger, StepRecord,
    LEDGER_COLUMNS,
};

use thiserror::Error;

use crate::fem::{eval_pressure, AssembledOperators, Discretization};
use crate::linalg::CsrMatrix;
use crate::mesh::Point;
use crate::stepper::{Scheme, StepTerms, TimeStepper};

/// Floor for denominators of relative residuals.
pub const REL_EPS: f64 = 1e-30;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("ledger has no records")]
    EmptyLedger,
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("mesh has no boundary tag {0:?}")]
    MissingTag(String),
    #[error("point ({}, {}) lies outside the domain", .0[0], .0[1])]
    PointOutsideDomain(Point),
}

fn quadratic(a: &CsrMatrix, u: &[f64]) -> Result<f64, DiagnosticsError> {
    if u.len() != a.ncols() {
        return Err(DiagnosticsError::DimensionMismatch {
            expected: a.ncols(),
            got: u.len(),
        });
    }
    Ok(a.quadratic_form(u).max(0.0).sqrt())
}

/// `√(uᵀMu)`.
pub fn norm_m(ops: &AssembledOperators, u: &[f64]) -> Result<f64, DiagnosticsError> {
    quadratic(&ops.m, u)
}

/// `√(uᵀGu) = ‖∇·u‖`.
pub fn norm_g(ops: &AssembledOperators, u: &[f64]) -> Result<f64, DiagnosticsError> {
    quadratic(&ops.g, u)
}

/// `√(uᵀAu) = ‖∇u‖`.
pub fn seminorm_a(ops: &AssembledOperators, u: &[f64]) -> Result<f64, DiagnosticsError> {
    quadratic(&ops.a, u)
}

/// Inputs of the Step-2 energy identity for one BDF2 step.
#[derive(Debug, Clone, Copy)]
pub struct EnergyIdentityInput<'a> {
    pub u_hat: &'a [f64],
    /// `uⁿ⁺¹`.
    pub u_new: &'a [f64],
    /// `uⁿ`.
    pub u_curr: &'a [f64],
    /// `uⁿ⁻¹`.
    pub u_prev: &'a [f64],
    pub dt: f64,
    pub gamma: f64,
    pub beta: f64,
    /// Dirichlet-constrained velocity dofs.
    pub constrained: &'a [usize],
}

/// Relative defect of the Step-2 energy identity
///
/// `‖û‖² = ‖u‖² + ‖û − u‖² + (4/3)γΔt‖∇·u‖² + (β/3)(‖∇·u‖² − ‖∇·uⁿ‖²
///        + ‖∇·(2u − uⁿ)‖² − ‖∇·(2uⁿ − uⁿ⁻¹)‖² + ‖∇·(u − 2uⁿ + uⁿ⁻¹)‖²)`,
///
/// with `u = uⁿ⁺¹`. The identity follows from testing Step 2 with `u`; when
/// the boundary data is nonzero `u` is not an admissible test function, and
/// the work `(4Δt/3) Σ_{i∈∂} u_i r_i` of the Step-2 residual `r` on the
/// constrained rows is added back. Interior residuals are not corrected, so
/// any violation of Step 2 in the interior shows up in the result.
pub fn energy_identity_residual(disc: &Discretization, inp: &EnergyIdentityInput) -> f64 {
    let ops = disc.ops();
    let (m, g) = (&ops.m, &ops.g);
    let n = inp.u_new.len();
    let comb = |c: [f64; 3]| -> Vec<f64> {
        (0..n)
            .map(|i| c[0] * inp.u_new[i] + c[1] * inp.u_curr[i] + c[2] * inp.u_prev[i])
            .collect()
    };
    let diff: Vec<f64> = inp.u_hat.iter().zip(inp.u_new).map(|(a, b)| a - b).collect();
    let lhs = m.quadratic_form(inp.u_hat);
    let div_new = g.quadratic_form(inp.u_new);
    let div_curr = g.quadratic_form(inp.u_curr);
    let div_extrap_new = g.quadratic_form(&comb([2.0, -1.0, 0.0]));
    let div_extrap_curr = g.quadratic_form(&comb([0.0, 2.0, -1.0]));
    let div_second = g.quadratic_form(&comb([1.0, -2.0, 1.0]));
    let rhs = m.quadratic_form(inp.u_new)
        + m.quadratic_form(&diff)
        + (4.0 / 3.0) * inp.gamma * inp.dt * div_new
        + (inp.beta / 3.0) * (div_new - div_curr + div_extrap_new - div_extrap_curr + div_second);

    let boundary_work = if inp.constrained.is_empty() {
        0.0
    } else {
        let a = 1.5 / inp.dt;
        let bdf = comb([3.0, -4.0, 1.0]);
        let mut w = 0.0;
        for &i in inp.constrained {
            let mr = m.row(i);
            let mut r = 0.0;
            for (&j, &v) in mr.0.iter().zip(mr.1) {
                r += a * v * (inp.u_new[j] - inp.u_hat[j]);
            }
            let gr = g.row(i);
            for (&j, &v) in gr.0.iter().zip(gr.1) {
                r += v * (inp.beta / (2.0 * inp.dt) * bdf[j] + inp.gamma * inp.u_new[j]);
            }
            w += inp.u_new[i] * r;
        }
        (4.0 * inp.dt / 3.0) * w
    };
    (lhs - rhs + boundary_work).abs() / lhs.max(REL_EPS)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityBudget {
    /// Left-hand energy for `N = 1, 2, …`.
    pub lhs: Vec<f64>,
    /// Initial-data bound.
    pub rhs: f64,
    pub satisfied: bool,
}

/// Relative slack allowed in the stability inequality.
pub const STABILITY_SLACK: f64 = 1e-8;

/// Evaluates the energy stability inequality of the modular scheme
/// (unforced, homogeneous Dirichlet data) for every `N ≥ 1`.
pub fn stability_budget(ledger: &RunLedger) -> Result<StabilityBudget, DiagnosticsError> {
    if ledger.forced {
        return Err(DiagnosticsError::NotApplicable("a body force is registered".into()));
    }
    if ledger.max_boundary_data() != 0.0 {
        return Err(DiagnosticsError::NotApplicable("boundary data is not homogeneous".into()));
    }
    let (gamma, beta) = match ledger.scheme {
        Scheme::Modular => (ledger.gamma, ledger.beta),
        Scheme::Plain => (0.0, 0.0),
        Scheme::Monolithic => {
            return Err(DiagnosticsError::NotApplicable(
                "the bound is stated for the modular scheme".into(),
            ))
        }
    };
    let first = ledger.steps.first().ok_or(DiagnosticsError::EmptyLedger)?;
    let dt = ledger.dt;
    let c = 2.0 * gamma * dt / 3.0 + beta;
    let level = |r: &StepRecord| {
        r.norm_u.powi(2) + r.norm_extrap.powi(2) + c * (r.div_u.powi(2) + r.div_extrap.powi(2))
    };
    let rhs = level(first);
    let mut lhs = vec![level(first)];
    let mut sum = 0.0;
    for r in &ledger.steps[1..] {
        sum += 4.0 * gamma * dt * r.div_u.powi(2)
            + 2.0 * ledger.nu * dt * r.grad_uhat.unwrap_or(0.0).powi(2);
        lhs.push(level(r) + sum);
    }
    let satisfied = lhs.iter().all(|&l| l <= rhs * (1.0 + STABILITY_SLACK));
    Ok(StabilityBudget { lhs, rhs, satisfied })
}

/// Momentum residual `R(v) = Σ_i v_i R_i` of the latest Step-1 solve:
/// `a M û − M·hist + N(w)û + νAû [+ (γ + βa)Gû − βG·hist] − Bᵀp − (f, ·)`.
pub fn momentum_residual(
    disc: &Discretization,
    nu: f64,
    gamma: f64,
    beta: f64,
    convection: bool,
    terms: &StepTerms,
    u_hat: &[f64],
    p: &[f64],
) -> Vec<f64> {
    let ops = disc.ops();
    let mut r = ops.m.mul_vec(u_hat);
    let mh = ops.m.mul_vec(&terms.hist);
    let au = ops.a.mul_vec(u_hat);
    let btp = ops.bt.mul_vec(p);
    for i in 0..r.len() {
        r[i] = terms.a * r[i] - mh[i] + nu * au[i] - btp[i] - terms.load[i];
    }
    if convection {
        let nu_hat = disc.convection(&terms.w).mul_vec(u_hat);
        r.iter_mut().zip(&nu_hat).for_each(|(a, b)| *a += b);
    }
    if terms.graddiv_in_step1 {
        let gu = ops.g.mul_vec(u_hat);
        let gh = ops.g.mul_vec(&terms.hist);
        for i in 0..r.len() {
            r[i] += (gamma + beta * terms.a) * gu[i] - beta * gh[i];
        }
    }
    r
}

/// Reference scales of the force coefficients `c = 2F/(ρŪ²D)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceScaling {
    pub rho: f64,
    pub u_ref: f64,
    pub diameter: f64,
}

impl Default for ForceScaling {
    fn default() -> Self {
        Self {
            rho: 1.0,
            u_ref: 1.0,
            diameter: 0.1,
        }
    }
}

/// Forces `(F_x, F_y)` on the boundary part `tag` from the volume residual
/// tested with the nodal lifting of the unit vectors.
pub fn boundary_forces(disc: &Discretization, residual: &[f64], tag: &str) -> Result<[f64; 2], DiagnosticsError> {
    let id = disc
        .mesh()
        .tag_id(tag)
        .ok_or_else(|| DiagnosticsError::MissingTag(tag.to_string()))?;
    let dm = disc.dofmap();
    let ns = dm.n_scalar();
    let (mut fx, mut fy) = (0.0, 0.0);
    for i in 0..ns {
        if dm.boundary_tag(i) == Some(id) {
            fx -= residual[i];
            fy -= residual[ns + i];
        }
    }
    Ok([fx, fy])
}

/// Drag and lift coefficients of the body tagged `tag` at the stepper's
/// latest level. Zero before the first Step-1 solve.
pub fn drag_lift(stepper: &TimeStepper, tag: &str, scaling: ForceScaling) -> Result<(f64, f64), DiagnosticsError> {
    let disc = stepper.disc();
    if disc.mesh().tag_id(tag).is_none() {
        return Err(DiagnosticsError::MissingTag(tag.to_string()));
    }
    let Some(terms) = stepper.last_terms() else {
        return Ok((0.0, 0.0));
    };
    let setup = stepper.setup();
    let st = stepper.state();
    let r = momentum_residual(
        disc,
        setup.nu,
        setup.params.gamma,
        setup.params.beta,
        setup.convection,
        terms,
        &st.u_hat,
        &st.p_curr,
    );
    let [fx, fy] = boundary_forces(disc, &r, tag)?;
    let scale = 2.0 / (scaling.rho * scaling.u_ref.powi(2) * scaling.diameter);
    Ok((scale * fx, scale * fy))
}

/// `p(a) − p(b)` with P1 evaluation.
pub fn pressure_drop(disc: &Discretization, p: &[f64], a: Point, b: Point) -> Result<f64, DiagnosticsError> {
    let pa = eval_pressure(disc.mesh(), p, a).ok_or(DiagnosticsError::PointOutsideDomain(a))?;
    let pb = eval_pressure(disc.mesh(), p, b).ok_or(DiagnosticsError::PointOutsideDomain(b))?;
    Ok(pa - pb)
}

/// Force-coefficient time series with running maxima.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForceCoefficients {
    pub t: Vec<f64>,
    pub drag: Vec<f64>,
    pub lift: Vec<f64>,
    pub pressure_drop: Vec<f64>,
}

impl ForceCoefficients {
    pub fn push(&mut self, t: f64, cd: f64, cl: f64, dp: f64) {
        self.t.push(t);
        self.drag.push(cd);
        self.lift.push(cl);
        self.pressure_drop.push(dp);
    }

    pub fn drag_max(&self) -> f64 {
        self.drag.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn lift_max(&self) -> f64 {
        self.lift.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
