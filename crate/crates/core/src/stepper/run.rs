use std::ops::ControlFlow;
use std::time::Instant;

use super::dirichlet::DirichletConstraints;
use super::saddle::SaddleSystem;
use super::step2::Step2Solver;
use super::{InitialVelocity, ProblemSetup, Scheme, SolverSettings, StepperError};
use crate::diagnostics::{energy_identity_residual, EnergyIdentityInput, RunLedger, StepRecord};
use crate::fem::Discretization;
use crate::linalg::{CsrMatrix, SolverReport};

/// Solution levels and bookkeeping of a run.
#[derive(Debug, Clone)]
pub struct TimeStepperState {
    pub n: usize,
    pub t: f64,
    /// `uⁿ⁻¹`.
    pub u_prev: Vec<f64>,
    /// `uⁿ`.
    pub u_curr: Vec<f64>,
    /// Step-1 velocity of the latest step.
    pub u_hat: Vec<f64>,
    /// Pressure of the latest step (zero mean).
    pub p_curr: Vec<f64>,
    pub reports: Vec<SolverReport>,
    pub failed: bool,
    pub first_failure: Option<usize>,
}

/// Everything the latest step used, kept for residual-based diagnostics.
#[derive(Debug, Clone)]
pub struct StepTerms {
    /// Leading time coefficient: `3/(2Δt)` for BDF2, `1/Δt` for backward Euler.
    pub a: f64,
    /// History: `(4uⁿ − uⁿ⁻¹)/(2Δt)` or `uⁿ/Δt`.
    pub hist: Vec<f64>,
    /// Convecting field.
    pub w: Vec<f64>,
    /// `(f(tⁿ⁺¹), φ_i)`.
    pub load: Vec<f64>,
    /// Whether Step 1 carried the grad-div terms (monolithic scheme).
    pub graddiv_in_step1: bool,
    pub bdf2: bool,
    /// `uⁿ` and `uⁿ⁻¹` before the step.
    pub u_n: Vec<f64>,
    pub u_nm1: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub n: usize,
    pub t: f64,
    pub report: Option<SolverReport>,
    pub s2_residual: Option<f64>,
    pub energy_residual: Option<f64>,
}

pub struct TimeStepper<'a> {
    disc: &'a Discretization,
    setup: &'a ProblemSetup,
    settings: SolverSettings,
    constraints: DirichletConstraints,
    saddle: SaddleSystem,
    step2: Step2Solver,
    convection: CsrMatrix,
    state: TimeStepperState,
    last: Option<StepTerms>,
}

fn axpby(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(x, y)| a * x + b * y).collect()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl<'a> TimeStepper<'a> {
    /// Validates the setup and builds `u⁰_h` (level 0).
    pub fn new(disc: &'a Discretization, setup: &'a ProblemSetup, settings: SolverSettings) -> Result<Self, StepperError> {
        setup.validate()?;
        let constraints = DirichletConstraints::new(disc, setup, 0.0)?;
        let saddle = SaddleSystem::new(disc);
        let nv = disc.n_velocity();
        let mut stepper = Self {
            disc,
            setup,
            settings,
            constraints,
            saddle,
            step2: Step2Solver::new(),
            convection: disc.pattern().zero_matrix(),
            state: TimeStepperState {
                n: 0,
                t: 0.0,
                u_prev: vec![0.0; nv],
                u_curr: vec![0.0; nv],
                u_hat: vec![0.0; nv],
                p_curr: vec![0.0; disc.n_pressure()],
                reports: Vec::new(),
                failed: false,
                first_failure: None,
            },
            last: None,
        };
        let u0 = match &setup.initial {
            InitialVelocity::Field(f) => {
                let mut u = disc.interpolate_velocity(|p| f(p)).into_values();
                stepper.constraints.impose(&mut u);
                u
            }
            InitialVelocity::StokesLift => stepper.stokes_lift()?,
        };
        stepper.state.u_curr = u0.clone();
        stepper.state.u_prev = u0.clone();
        stepper.state.u_hat = u0;
        Ok(stepper)
    }

    fn stokes_lift(&mut self) -> Result<Vec<f64>, StepperError> {
        let ops = self.disc.ops();
        self.saddle.assemble(self.disc, &[(self.setup.nu, &ops.a)]);
        let rhs = self.disc.load(&|x| self.setup.force_at(x, 0.0));
        let x0 = vec![0.0; self.saddle.dim()];
        let (u, p, report) = self.saddle.solve(self.disc, &rhs, &self.constraints, &x0, &self.settings);
        if !report.converged || !all_finite(&u) {
            return Err(StepperError::InvalidSetup(format!(
                "steady Stokes initial solve failed: {}",
                report.breakdown_reason.unwrap_or_else(|| "no convergence".into())
            )));
        }
        self.state.p_curr = p;
        Ok(u)
    }

    pub fn disc(&self) -> &Discretization {
        self.disc
    }

    pub fn setup(&self) -> &ProblemSetup {
        self.setup
    }

    pub fn state(&self) -> &TimeStepperState {
        &self.state
    }

    pub fn last_terms(&self) -> Option<&StepTerms> {
        self.last.as_ref()
    }

    pub fn constraints(&self) -> &DirichletConstraints {
        &self.constraints
    }

    pub fn step2_solver(&self) -> &Step2Solver {
        &self.step2
    }

    /// Produces `u¹_h`: the exact interpolant at `Δt` when an exact solution
    /// is registered, otherwise one backward-Euler step of the scheme.
    pub fn startup(&mut self) -> Result<StepOutcome, StepperError> {
        assert_eq!(self.state.n, 0, "startup runs once, from level 0");
        let dt = self.setup.dt;
        if let Some(exact) = &self.setup.exact {
            self.constraints.update(dt);
            let mut u1 = self.disc.interpolate_velocity(|p| (exact.velocity)(p, dt)).into_values();
            self.constraints.impose(&mut u1);
            if let Some(pe) = &exact.pressure {
                let mut p = self.disc.interpolate_pressure(|x| pe(x, dt)).into_values();
                let mean = self.disc.pressure_mean(&p);
                p.iter_mut().for_each(|v| *v -= mean);
                self.state.p_curr = p;
            }
            self.state.u_prev = std::mem::replace(&mut self.state.u_curr, u1.clone());
            self.state.u_hat = u1;
            self.state.n = 1;
            self.state.t = dt;
            self.last = None;
            return Ok(StepOutcome {
                n: 1,
                t: dt,
                report: None,
                s2_residual: None,
                energy_residual: None,
            });
        }
        let a = 1.0 / dt;
        let hist: Vec<f64> = self.state.u_curr.iter().map(|v| v / dt).collect();
        let w = self.state.u_curr.clone();
        self.step(a, hist, w, false)
    }

    /// One BDF2 step from level `n ≥ 1` to `n + 1`.
    pub fn advance(&mut self) -> Result<StepOutcome, StepperError> {
        assert!(self.state.n >= 1, "advance needs two start levels");
        let dt = self.setup.dt;
        let a = 1.5 / dt;
        let hist = axpby(2.0 / dt, &self.state.u_curr, -0.5 / dt, &self.state.u_prev);
        let w = axpby(2.0, &self.state.u_curr, -1.0, &self.state.u_prev);
        self.step(a, hist, w, true)
    }

    fn step(&mut self, a: f64, hist: Vec<f64>, w: Vec<f64>, bdf2: bool) -> Result<StepOutcome, StepperError> {
        let disc = self.disc;
        let setup = self.setup;
        let ops = disc.ops();
        let n_new = self.state.n + 1;
        let t_new = n_new as f64 * setup.dt;
        let (gamma, beta) = (setup.params.gamma, setup.params.beta);
        self.constraints.update(t_new);

        let load = match &setup.body_force {
            Some(f) => disc.load(&|x| f(x, t_new)),
            None => vec![0.0; disc.n_velocity()],
        };
        if setup.convection {
            disc.convection_into(&w, &mut self.convection);
        } else {
            self.convection.values_mut().fill(0.0);
        }

        let monolithic = setup.scheme == Scheme::Monolithic;
        let mut terms: Vec<(f64, &CsrMatrix)> = vec![(a, &ops.m), (setup.nu, &ops.a), (1.0, &self.convection)];
        let mut rhs = ops.m.mul_vec(&hist);
        for (r, l) in rhs.iter_mut().zip(&load) {
            *r += l;
        }
        if monolithic {
            terms.push((gamma + beta * a, &ops.g));
            if beta > 0.0 {
                let gh = ops.g.mul_vec(&hist);
                for (r, v) in rhs.iter_mut().zip(&gh) {
                    *r += beta * v;
                }
            }
        }
        self.saddle.assemble(disc, &terms);

        let mut x0 = w.clone();
        x0.extend_from_slice(&self.state.p_curr);
        let (u_hat, p, report) = self.saddle.solve(disc, &rhs, &self.constraints, &x0, &self.settings);
        if !report.converged {
            self.state.failed = true;
            self.state.first_failure.get_or_insert(n_new);
        }

        let (u_new, s2_residual, energy_residual) = if setup.scheme == Scheme::Modular {
            let rhs2 = {
                let mu = ops.m.mul_vec(&u_hat);
                let gh = ops.g.mul_vec(&hist);
                axpby(a, &mu, beta, &gh)
            };
            let (u, res) = self.step2.solve(disc, a, beta * a + gamma, &rhs2, &self.constraints)?;
            let energy = bdf2.then(|| {
                energy_identity_residual(
                    disc,
                    &EnergyIdentityInput {
                        u_hat: &u_hat,
                        u_new: &u,
                        u_curr: &self.state.u_curr,
                        u_prev: &self.state.u_prev,
                        dt: setup.dt,
                        gamma,
                        beta,
                        constrained: self.constraints.dofs(),
                    },
                )
            });
            (u, Some(res), energy)
        } else {
            (u_hat.clone(), None, None)
        };

        let u_n = std::mem::replace(&mut self.state.u_curr, u_new);
        let u_nm1 = std::mem::replace(&mut self.state.u_prev, u_n.clone());
        self.state.u_hat = u_hat;
        self.state.p_curr = p;
        self.state.n = n_new;
        self.state.t = t_new;
        self.state.reports.push(report.clone());
        self.last = Some(StepTerms {
            a,
            hist,
            w,
            load,
            graddiv_in_step1: monolithic,
            bdf2,
            u_n,
            u_nm1,
        });
        Ok(StepOutcome {
            n: n_new,
            t: t_new,
            report: Some(report),
            s2_residual,
            energy_residual,
        })
    }

    /// Whether the current levels contain only finite values.
    pub fn is_finite(&self) -> bool {
        all_finite(&self.state.u_curr) && all_finite(&self.state.p_curr)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub ledger: RunLedger,
    pub state: TimeStepperState,
    /// Some Step-1 solve did not converge.
    pub failed: bool,
    pub first_failure: Option<usize>,
    /// The run stopped early on non-finite values.
    pub aborted: bool,
    /// The observer ended the run before `T`.
    pub stopped: bool,
    pub wall_time: f64,
}

pub fn run(disc: &Discretization, setup: &ProblemSetup, settings: SolverSettings) -> Result<RunOutput, StepperError> {
    run_with(disc, setup, settings, |_| {})
}

/// Runs to `T`, calling `observer` at level 0 and after every step.
pub fn run_with(
    disc: &Discretization,
    setup: &ProblemSetup,
    settings: SolverSettings,
    mut observer: impl FnMut(&TimeStepper),
) -> Result<RunOutput, StepperError> {
    run_controlled(disc, setup, settings, |s| {
        observer(s);
        ControlFlow::Continue(())
    })
}

/// Like [`run_with`], but the observer may end the run early by returning
/// `ControlFlow::Break`; the output then has `stopped` set.
pub fn run_controlled(
    disc: &Discretization,
    setup: &ProblemSetup,
    settings: SolverSettings,
    mut observer: impl FnMut(&TimeStepper) -> ControlFlow<()>,
) -> Result<RunOutput, StepperError> {
    let start = Instant::now();
    let mut stepper = TimeStepper::new(disc, setup, settings)?;
    let mut ledger = RunLedger::new(setup);
    ledger.set_initial(StepRecord::from_stepper(&stepper, None));
    let mut stopped = observer(&stepper).is_break();

    let n_steps = setup.n_steps();
    let mut aborted = false;
    for k in 0..n_steps {
        if stopped {
            break;
        }
        let outcome = if k == 0 { stepper.startup()? } else { stepper.advance()? };
        let record = StepRecord::from_stepper(&stepper, Some(&outcome));
        ledger.push(record);
        stopped = observer(&stepper).is_break();
        if !stepper.is_finite() {
            aborted = true;
            stepper.state.failed = true;
            stepper.state.first_failure.get_or_insert(outcome.n);
            break;
        }
    }
    let state = stepper.state.clone();
    Ok(RunOutput {
        ledger,
        failed: state.failed,
        first_failure: state.first_failure,
        aborted,
        stopped: stopped && state.n < n_steps,
        state,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
