//! Parameter sweeps over `(scheme, γ, β)` with wall time and Step-1
//! iteration statistics, and the Reynolds-number robustness study.

use std::ops::ControlFlow;

use rayon::prelude::*;

use mgd_core::diagnostics::{aggregate_norms, Quantity};
use mgd_core::mesh::generate_unit_square;
use mgd_core::stepper::{run, run_controlled, Scheme, SolverSettings, StabilizationParams};
use mgd_core::Discretization;

use crate::{BenchError, TaylorGreenSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepEntry {
    pub scheme: Scheme,
    pub gamma: f64,
    pub beta: f64,
}

impl SweepEntry {
    pub fn new(scheme: Scheme, gamma: f64, beta: f64) -> Self {
        Self { scheme, gamma, beta }
    }
}

/// All combinations, schemes outermost, then `β`, then `γ`.
pub fn sweep_grid(schemes: &[Scheme], gammas: &[f64], betas: &[f64]) -> Vec<SweepEntry> {
    let mut v = Vec::with_capacity(schemes.len() * gammas.len() * betas.len());
    for &s in schemes {
        for &b in betas {
            for &g in gammas {
                v.push(SweepEntry::new(s, g, b));
            }
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub entry: SweepEntry,
    pub wall_time: f64,
    /// Some Step-1 solve did not converge.
    pub failed: bool,
    pub first_failure: Option<usize>,
    pub steps: usize,
    pub mean_iterations: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub m: usize,
    /// In input order.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn find(&self, scheme: Scheme, gamma: f64, beta: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.entry.scheme == scheme && r.entry.gamma == gamma && r.entry.beta == beta)
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub m: usize,
    pub t_final: f64,
    pub spec: TaylorGreenSpec,
    pub settings: SolverSettings,
    /// End a run at its first non-converged Step-1 solve.
    pub stop_on_failure: bool,
    pub parallel: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            m: 32,
            t_final: 1.0,
            spec: TaylorGreenSpec::default(),
            settings: SolverSettings::default(),
            stop_on_failure: false,
            parallel: false,
        }
    }
}

fn sweep_one(disc: &Discretization, e: &SweepEntry, opts: &SweepOptions) -> Result<SweepRow, BenchError> {
    let params = StabilizationParams::new(e.gamma, e.beta)?;
    let setup = opts.spec.setup(1.0 / opts.m as f64, opts.t_final, e.scheme, params);
    let stop = opts.stop_on_failure;
    let out = run_controlled(disc, &setup, opts.settings, |s| {
        if stop && s.state().failed {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    let iters = out.ledger.step1_iterations();
    let mean = if iters.is_empty() {
        0.0
    } else {
        iters.iter().sum::<usize>() as f64 / iters.len() as f64
    };
    Ok(SweepRow {
        entry: *e,
        wall_time: out.wall_time,
        failed: out.failed,
        first_failure: out.first_failure,
        steps: out.ledger.steps.len(),
        mean_iterations: mean,
        max_iterations: iters.iter().copied().max().unwrap_or(0),
    })
}

/// Runs every entry on the Taylor-Green problem at resolution `m`.
/// Solver failures are data; only setup errors are returned.
pub fn timing_sweep(entries: &[SweepEntry], opts: &SweepOptions) -> Result<SweepResult, BenchError> {
    let disc = Discretization::new(generate_unit_square(opts.m));
    let rows: Result<Vec<SweepRow>, BenchError> = if opts.parallel {
        entries.par_iter().map(|e| sweep_one(&disc, e, opts)).collect()
    } else {
        entries.iter().map(|e| sweep_one(&disc, e, opts)).collect()
    };
    Ok(SweepResult { m: opts.m, rows: rows? })
}

/// Error norms of one scheme at one Reynolds number.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessRow {
    pub re: f64,
    pub scheme: Scheme,
    /// `|‖u_h − u‖|_{∞,0}`.
    pub u_linf: f64,
    /// `|‖∇·(u_h − u)‖|_{2,0}`.
    pub div_l2: f64,
    /// `|‖∇(u_h − u)‖|_{2,0}`.
    pub grad_l2: f64,
    /// `|‖p_h − p‖|_{2,0}`.
    pub p_l2: f64,
    pub failed: bool,
}

#[derive(Debug, Clone)]
pub struct RobustnessOptions {
    pub m: usize,
    pub tau: f64,
    pub omega: f64,
    pub params: StabilizationParams,
    pub t_final: f64,
    pub schemes: Vec<Scheme>,
    pub settings: SolverSettings,
    pub parallel: bool,
}

impl Default for RobustnessOptions {
    fn default() -> Self {
        Self {
            m: 32,
            tau: 100.0,
            omega: 1.0,
            params: StabilizationParams { gamma: 1.0, beta: 0.2 },
            t_final: 1.0,
            schemes: vec![Scheme::Plain, Scheme::Monolithic, Scheme::Modular],
            settings: SolverSettings::default(),
            parallel: false,
        }
    }
}

/// Runs each scheme for each Reynolds number with `τ` fixed, so the
/// closed-form body force is active whenever `Re ≠ τ`. Rows are ordered by
/// `Re`, then by scheme as listed in the options.
pub fn re_robustness(re_list: &[f64], opts: &RobustnessOptions) -> Result<Vec<RobustnessRow>, BenchError> {
    if re_list.iter().any(|&r| !(r > 0.0)) {
        return Err(BenchError::InvalidInput("Reynolds numbers must be positive".into()));
    }
    let disc = Discretization::new(generate_unit_square(opts.m));
    let jobs: Vec<(f64, Scheme)> = re_list
        .iter()
        .flat_map(|&re| opts.schemes.iter().map(move |&s| (re, s)))
        .collect();
    let one = |&(re, scheme): &(f64, Scheme)| -> Result<RobustnessRow, BenchError> {
        let spec = TaylorGreenSpec::new(opts.omega, opts.tau, re);
        let params = if scheme == Scheme::Plain {
            StabilizationParams::none()
        } else {
            opts.params
        };
        let setup = spec.setup(1.0 / opts.m as f64, opts.t_final, scheme, params);
        let out = run(&disc, &setup, opts.settings)?;
        let l = &out.ledger;
        Ok(RobustnessRow {
            re,
            scheme,
            u_linf: aggregate_norms(l, Quantity::VelocityError)?.sup,
            div_l2: aggregate_norms(l, Quantity::DivergenceError)?.l2,
            grad_l2: aggregate_norms(l, Quantity::VelocityGradientError)?.l2,
            p_l2: aggregate_norms(l, Quantity::PressureError)?.l2,
            failed: out.failed,
        })
    };
    if opts.parallel {
        jobs.par_iter().map(one).collect()
    } else {
        jobs.iter().map(one).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepOptions {
        SweepOptions {
            m: 4,
            t_final: 0.5,
            ..Default::default()
        }
    }

    #[test]
    fn grid_order_and_size() {
        let g = sweep_grid(&[Scheme::Monolithic, Scheme::Modular], &[0.0, 2.0], &[0.0, 0.2, 0.8]);
        assert_eq!(g.len(), 12);
        assert_eq!(g[0], SweepEntry::new(Scheme::Monolithic, 0.0, 0.0));
        assert_eq!(g[1], SweepEntry::new(Scheme::Monolithic, 2.0, 0.0));
        assert_eq!(g[6].scheme, Scheme::Modular);
    }

    #[test]
    fn parallel_sweep_keeps_input_order() {
        let entries = sweep_grid(&[Scheme::Modular, Scheme::Monolithic], &[0.0, 2.0, 200.0], &[0.0]);
        let serial = timing_sweep(&entries, &small()).unwrap();
        let par = timing_sweep(&entries, &SweepOptions { parallel: true, ..small() }).unwrap();
        for (a, b) in serial.rows.iter().zip(&par.rows) {
            assert_eq!(a.entry, b.entry);
            assert_eq!(a.mean_iterations, b.mean_iterations);
            assert_eq!(a.failed, b.failed);
        }
        assert_eq!(serial.rows.len(), entries.len());
        for r in &serial.rows {
            assert_eq!(r.steps, 2);
        }
    }

    #[test]
    fn failed_flag_matches_reports() {
        let mut opts = small();
        opts.settings = SolverSettings {
            linear: mgd_core::stepper::LinearSolver::Gmres(mgd_core::linalg::GmresOptions {
                restart: 2,
                tol: 1e-14,
                max_iters: 2,
            }),
            preconditioner: mgd_core::stepper::PreconditionerKind::None,
        };
        let r = timing_sweep(&[SweepEntry::new(Scheme::Plain, 0.0, 0.0)], &opts).unwrap();
        assert!(r.rows[0].failed);
        assert_eq!(r.rows[0].first_failure, Some(2));
        opts.stop_on_failure = true;
        let r = timing_sweep(&[SweepEntry::new(Scheme::Plain, 0.0, 0.0)], &opts).unwrap();
        assert!(r.rows[0].failed);
        assert_eq!(r.rows[0].steps, 2);
    }

    #[test]
    fn plain_and_monolithic_agree_without_graddiv() {
        let entries = [
            SweepEntry::new(Scheme::Plain, 0.0, 0.0),
            SweepEntry::new(Scheme::Monolithic, 0.0, 0.0),
        ];
        let r = timing_sweep(&entries, &small()).unwrap();
        assert_eq!(r.rows[0].mean_iterations, r.rows[1].mean_iterations);
    }

    #[test]
    fn robustness_rows_are_ordered() {
        let opts = RobustnessOptions {
            m: 4,
            t_final: 0.5,
            ..Default::default()
        };
        let rows = re_robustness(&[1.0, 100.0], &opts).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].re, 1.0);
        assert_eq!(rows[2].scheme, Scheme::Modular);
        assert_eq!(rows[3].re, 100.0);
        assert!(rows.iter().all(|r| r.u_linf.is_finite() && !r.failed));
        assert!(re_robustness(&[0.0], &opts).is_err());
    }
}
