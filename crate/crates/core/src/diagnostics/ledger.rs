use super::{norm_g, norm_m, seminorm_a, DiagnosticsError};
use crate::fem::{div_l2_error, h1_seminorm_error, l2_error, pressure_l2_error_mod_const};
use crate::linalg::SolverReport;
use crate::stepper::{ProblemSetup, Scheme, StepOutcome, TimeStepper};

/// Errors against a registered exact solution at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    /// `‖u_h − u‖`.
    pub u_l2: f64,
    /// `‖∇(u_h − u)‖`, when the exact gradient is known.
    pub u_h1: Option<f64>,
    /// `‖∇·(u_h − u)‖`.
    pub div: f64,
    /// `‖p_h − p‖` modulo constants, only for levels whose pressure was
    /// computed.
    pub p_l2: Option<f64>,
}

/// Snapshot of one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    pub t: f64,
    /// `‖uⁿ‖`.
    pub norm_u: f64,
    /// `‖∇·uⁿ‖`.
    pub div_u: f64,
    /// `‖2uⁿ − uⁿ⁻¹‖` (with `u⁻¹ = u⁰`).
    pub norm_extrap: f64,
    /// `‖∇·(2uⁿ − uⁿ⁻¹)‖`.
    pub div_extrap: f64,
    /// `‖∇·ûⁿ‖` for levels produced by a Step-1 solve.
    pub div_uhat: Option<f64>,
    /// `‖∇ûⁿ‖`.
    pub grad_uhat: Option<f64>,
    pub energy_residual: Option<f64>,
    pub s1: Option<SolverReport>,
    pub s2_residual: Option<f64>,
    /// Largest Dirichlet value imposed at this level.
    pub boundary_max: f64,
    pub errors: Option<ErrorRecord>,
}

impl StepRecord {
    /// Measures the stepper's current level. `outcome` is `None` for level 0.
    pub fn from_stepper(stepper: &TimeStepper, outcome: Option<&StepOutcome>) -> Self {
        let disc = stepper.disc();
        let setup = stepper.setup();
        let st = stepper.state();
        let ops = disc.ops();
        let extrap: Vec<f64> = st.u_curr.iter().zip(&st.u_prev).map(|(c, p)| 2.0 * c - p).collect();
        let computed = outcome.is_some_and(|o| o.report.is_some());
        let errors = setup.exact.as_ref().map(|ex| {
            let (mesh, dm, t) = (disc.mesh(), disc.dofmap(), st.t);
            ErrorRecord {
                u_l2: l2_error(mesh, dm, &st.u_curr, |x| (ex.velocity)(x, t)),
                u_h1: ex
                    .gradient
                    .as_ref()
                    .map(|g| h1_seminorm_error(mesh, dm, &st.u_curr, |x| g(x, t))),
                div: div_l2_error(mesh, dm, &st.u_curr, |_| 0.0),
                p_l2: match (&ex.pressure, computed) {
                    (Some(pe), true) => Some(pressure_l2_error_mod_const(mesh, &st.p_curr, |x| pe(x, t))),
                    _ => None,
                },
            }
        });
        let q = |v: &[f64]| norm_m(ops, v).expect("layout");
        let d = |v: &[f64]| norm_g(ops, v).expect("layout");
        Self {
            n: st.n,
            t: st.t,
            norm_u: q(&st.u_curr),
            div_u: d(&st.u_curr),
            norm_extrap: q(&extrap),
            div_extrap: d(&extrap),
            div_uhat: computed.then(|| d(&st.u_hat)),
            grad_uhat: computed.then(|| seminorm_a(ops, &st.u_hat).expect("layout")),
            energy_residual: outcome.and_then(|o| o.energy_residual),
            s1: outcome.and_then(|o| o.report.clone()),
            s2_residual: outcome.and_then(|o| o.s2_residual),
            boundary_max: stepper.constraints().max_abs_value(),
            errors,
        }
    }
}

/// Per-level records of one run: level 0, then levels `1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLedger {
    pub dt: f64,
    pub nu: f64,
    pub gamma: f64,
    pub beta: f64,
    pub scheme: Scheme,
    /// A body force was registered.
    pub forced: bool,
    pub initial: Option<StepRecord>,
    pub steps: Vec<StepRecord>,
}

impl RunLedger {
    pub fn new(setup: &ProblemSetup) -> Self {
        Self {
            dt: setup.dt,
            nu: setup.nu,
            gamma: setup.params.gamma,
            beta: setup.params.beta,
            scheme: setup.scheme,
            forced: setup.body_force.is_some(),
            initial: None,
            steps: Vec::new(),
        }
    }

    pub fn set_initial(&mut self, r: StepRecord) {
        self.initial = Some(r);
    }

    /// Appends a record; times must increase strictly.
    pub fn push(&mut self, r: StepRecord) {
        if let Some(last) = self.records().last() {
            assert!(r.t > last.t, "ledger times must increase ({} after {})", r.t, last.t);
        }
        self.steps.push(r);
    }

    /// All records, level 0 first.
    pub fn records(&self) -> impl Iterator<Item = &StepRecord> + '_ {
        self.initial.iter().chain(self.steps.iter())
    }

    pub fn len(&self) -> usize {
        self.initial.iter().count() + self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn failed(&self) -> bool {
        self.steps.iter().any(|r| r.s1.as_ref().is_some_and(|s| !s.converged))
    }

    pub fn first_failure(&self) -> Option<usize> {
        self.steps
            .iter()
            .find(|r| r.s1.as_ref().is_some_and(|s| !s.converged))
            .map(|r| r.n)
    }

    /// Step-1 iteration counts of all solved steps.
    pub fn step1_iterations(&self) -> Vec<usize> {
        self.steps.iter().filter_map(|r| r.s1.as_ref().map(|s| s.iterations)).collect()
    }

    pub fn max_boundary_data(&self) -> f64 {
        self.records().fold(0.0, |m, r| m.max(r.boundary_max))
    }
}

/// Column set of the per-step ledger table.
pub const LEDGER_COLUMNS: [&str; 10] = [
    "n",
    "t",
    "norm_u",
    "div_u",
    "div_uhat",
    "grad_uhat",
    "energy_residual",
    "s1_iters",
    "s1_converged",
    "s2_residual",
];

/// Float formatting with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl StepRecord {
    /// Fields in [`LEDGER_COLUMNS`] order; empty strings mark "not applicable".
    pub fn ledger_fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            fmt_f64(self.t),
            fmt_f64(self.norm_u),
            fmt_f64(self.div_u),
            opt(self.div_uhat),
            opt(self.grad_uhat),
            opt(self.energy_residual),
            self.s1.as_ref().map(|s| s.iterations.to_string()).unwrap_or_default(),
            self.s1.as_ref().map(|s| s.converged.to_string()).unwrap_or_default(),
            opt(self.s2_residual),
        ]
    }
}

/// Time-series quantities that can be aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    NormU,
    DivU,
    VelocityError,
    VelocityGradientError,
    DivergenceError,
    PressureError,
}

impl Quantity {
    fn value(self, r: &StepRecord) -> Option<f64> {
        match self {
            Quantity::NormU => Some(r.norm_u),
            Quantity::DivU => Some(r.div_u),
            Quantity::VelocityError => r.errors.map(|e| e.u_l2),
            Quantity::VelocityGradientError => r.errors.and_then(|e| e.u_h1),
            Quantity::DivergenceError => r.errors.map(|e| e.div),
            Quantity::PressureError => r.errors.and_then(|e| e.p_l2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    /// `max_n vⁿ`.
    pub sup: f64,
    /// `(Δt Σ_n (vⁿ)²)^{1/2}`.
    pub l2: f64,
}

/// Discrete `L^∞` and `L²` in time over the records where `which` exists.
pub fn aggregate_norms(ledger: &RunLedger, which: Quantity) -> Result<Aggregate, DiagnosticsError> {
    aggregate_series(ledger.dt, ledger.records().filter_map(|r| which.value(r)))
}

pub fn aggregate_series(dt: f64, values: impl IntoIterator<Item = f64>) -> Result<Aggregate, DiagnosticsError> {
    let mut sup = f64::NEG_INFINITY;
    let mut sq = 0.0;
    let mut count = 0usize;
    for v in values {
        sup = sup.max(v);
        sq += v * v;
        count += 1;
    }
    if count == 0 {
        return Err(DiagnosticsError::EmptyLedger);
    }
    Ok(Aggregate {
        sup,
        l2: (dt * sq).sqrt(),
    })
}
