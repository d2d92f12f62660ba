//! Subcommands. Every command validates and builds its problem before
//! touching the output directory, so setup errors leave no files behind.

use std::fs;
use std::io;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use thiserror::Error;

use mgd_bench::cylinder::{cylinder_setup, BACK, DIAMETER, FRONT};
use mgd_bench::step_channel::step_channel_setup;
use mgd_bench::{
    cylinder_mesh, step_channel_mesh, taylor_green_convergence, timing_sweep, BenchError, ConvergenceOptions,
    CylinderMeshOptions, CylinderOptions, StepChannelOptions, SweepEntry, SweepOptions, TaylorGreenSpec,
    CONVERGENCE_NORMS,
};
use mgd_core::diagnostics::{
    aggregate_norms, drag_lift, fmt_f64, norm_m, pressure_drop, stability_budget, DiagnosticsError,
    ForceCoefficients, ForceScaling, Quantity, RunLedger, STABILITY_SLACK,
};
use mgd_core::mesh::{generate_unit_square, read_mesh_file, MeshError};
use mgd_core::stepper::{
    run, run_controlled, run_with, ProblemSetup, RunOutput, Scheme, StabilizationParams, StepperError, TimeStepper,
};
use mgd_core::{Discretization, Mesh};

use crate::config::{Config, ConfigError, MeshSource, Problem};
use crate::output::{ledger_table, write_csv, write_vtk, Summary, Table, VtkFields};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("mesh error: {0}")]
    Mesh(#[from] MeshError),
    #[error("setup error: {0}")]
    Stepper(#[from] StepperError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error("diagnostics error: {0}")]
    Diagnostics(#[from] DiagnosticsError),
}

/// Outcome of a command that got past setup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Completed, but some solve or check failed.
    Failed,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Failed => 2,
        }
    }

    fn from_failed(failed: bool) -> Self {
        if failed {
            Status::Failed
        } else {
            Status::Success
        }
    }
}

const BODY_TAG: &str = "cylinder";

fn build_mesh(cfg: &Config) -> Result<Mesh, CliError> {
    Ok(match cfg.mesh_source()? {
        MeshSource::UnitSquare(m) => generate_unit_square(*m),
        MeshSource::File(p) => read_mesh_file(p)?,
        MeshSource::Builtin => match cfg.problem {
            Problem::StepChannel => step_channel_mesh(cfg.channel_h)?,
            Problem::Cylinder => cylinder_mesh(&CylinderMeshOptions::default())?,
            Problem::TaylorGreen | Problem::Custom => unreachable!("config gives these an explicit mesh source"),
        },
    })
}

fn taylor_green_spec(cfg: &Config) -> TaylorGreenSpec {
    TaylorGreenSpec::new(cfg.omega, cfg.tau, 1.0 / cfg.nu)
}

fn build_setup(cfg: &Config, mesh: &Mesh) -> Result<ProblemSetup, CliError> {
    let dt = cfg.time_step()?;
    let setup = match cfg.problem {
        Problem::TaylorGreen => taylor_green_spec(cfg).setup(dt, cfg.t_final, cfg.scheme, cfg.params),
        Problem::StepChannel => {
            let opts = StepChannelOptions {
                h: cfg.channel_h,
                nu: cfg.nu,
                dt,
                t_final: cfg.t_final,
                inflow_scale: 1.0,
                start: cfg.start,
                settings: cfg.solver,
            };
            step_channel_setup(&opts, cfg.scheme, cfg.params)
        }
        Problem::Cylinder => {
            let opts = CylinderOptions {
                nu: cfg.nu,
                dt,
                t_final: cfg.t_final,
                settings: cfg.solver,
                ..Default::default()
            };
            cylinder_setup(&opts, cfg.scheme, cfg.params)
        }
        Problem::Custom => {
            let mut s = ProblemSetup::new(cfg.nu, dt, cfg.t_final, cfg.scheme, cfg.params)
                .with_dirichlet_default(|_, _| [0.0, 0.0]);
            for (tag, &v) in &cfg.boundary {
                if mesh.tag_id(tag).is_none() {
                    return Err(ConfigError::new(format!("boundary.{tag}"), "the mesh has no such tag").into());
                }
                s = s.with_dirichlet(tag, move |_, _| v);
            }
            s
        }
    };
    setup.validate()?;
    Ok(setup)
}

fn prepare_out(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn mean(v: &[usize]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<usize>() as f64 / v.len() as f64
    }
}

fn describe(s: &mut Summary, cfg: &Config, setup: &ProblemSetup) {
    s.text("problem", cfg.problem.name())
        .text("scheme", cfg.scheme.name())
        .num("gamma", cfg.params.gamma)
        .num("beta", cfg.params.beta)
        .num("nu", cfg.nu)
        .num("dt", setup.dt)
        .num("t_final", setup.t_final);
}

fn run_summary(s: &mut Summary, out: &RunOutput) -> Result<(), CliError> {
    let l = &out.ledger;
    let iters = l.step1_iterations();
    let last = l.steps.last();
    s.text("steps", l.steps.len())
        .text("failed", out.failed)
        .text("first_failure", out.first_failure.map(|n| n.to_string()).unwrap_or_default())
        .text("aborted", out.aborted)
        .num("norm_u_final", last.map_or(f64::NAN, |r| r.norm_u))
        .num("div_u_final", last.map_or(f64::NAN, |r| r.div_u))
        .num("div_u_l2", aggregate_norms(l, Quantity::DivU)?.l2)
        .num("s1_iters_mean", mean(&iters))
        .text("s1_iters_max", iters.iter().max().copied().unwrap_or(0));
    let energy: Vec<f64> = l.steps.iter().filter_map(|r| r.energy_residual).collect();
    if !energy.is_empty() {
        s.num("energy_residual_max", energy.iter().copied().fold(0.0, f64::max));
    }
    match stability_budget(l) {
        Ok(b) => {
            s.text("stability_satisfied", b.satisfied);
        }
        Err(DiagnosticsError::NotApplicable(_)) => {
            s.text("stability_satisfied", "");
        }
        Err(e) => return Err(e.into()),
    }
    if l.steps.iter().any(|r| r.errors.is_some()) {
        s.num("u_linf_l2", aggregate_norms(l, Quantity::VelocityError)?.sup)
            .num("div_linf_l2", aggregate_norms(l, Quantity::DivergenceError)?.sup)
            .num("div_l2_l2", aggregate_norms(l, Quantity::DivergenceError)?.l2)
            .num("grad_l2_l2", aggregate_norms(l, Quantity::VelocityGradientError)?.l2)
            .num("p_l2_l2", aggregate_norms(l, Quantity::PressureError)?.l2);
    }
    Ok(())
}

/// Single run: `ledger.csv`, `summary.csv`, `fields_NNNN.vtk` every
/// `snapshot_stride` levels and, for the cylinder, `forces.csv`.
pub fn cmd_run(cfg: &Config, out: &Path) -> Result<Status, CliError> {
    let mesh = build_mesh(cfg)?;
    let setup = build_setup(cfg, &mesh)?;
    let disc = Discretization::new(mesh);

    let stride = cfg.snapshot_stride;
    let cylinder = cfg.problem == Problem::Cylinder && disc.mesh().tag_id(BODY_TAG).is_some();
    let scaling = ForceScaling {
        diameter: DIAMETER,
        ..Default::default()
    };
    let mut forces = ForceCoefficients::default();
    let mut err: Option<CliError> = None;
    let mut observe = |s: &TimeStepper| -> Result<(), CliError> {
        let st = s.state();
        // The observer first runs after the stepper is built, so a setup
        // error never leaves a directory behind.
        if st.n == 0 {
            prepare_out(out)?;
        }
        if stride > 0 && st.n % stride == 0 {
            let f = VtkFields {
                title: &format!("{} n={} t={}", cfg.problem.name(), st.n, fmt_f64(st.t)),
                velocity: &st.u_curr,
                pressure: &st.p_curr,
            };
            write_vtk(s.disc().mesh(), s.disc().dofmap(), &f, &out.join(format!("fields_{:04}.vtk", st.n)))?;
        }
        if cylinder && st.n > 0 {
            let (cd, cl) = drag_lift(s, BODY_TAG, scaling)?;
            // Probe points lie outside user-supplied meshes of other shapes.
            let dp = pressure_drop(s.disc(), &st.p_curr, FRONT, BACK).unwrap_or(f64::NAN);
            forces.push(st.t, cd, cl, dp);
        }
        Ok(())
    };
    let result = run_controlled(&disc, &setup, cfg.solver, |s| match observe(s) {
        Ok(()) => ControlFlow::Continue(()),
        Err(e) => {
            err = Some(e);
            ControlFlow::Break(())
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }

    write_csv(&ledger_table(&result.ledger), &out.join("ledger.csv"))?;
    let mut s = Summary::default();
    describe(&mut s, cfg, &setup);
    s.text("n_velocity", disc.n_velocity()).text("n_pressure", disc.n_pressure());
    run_summary(&mut s, &result)?;
    if cylinder {
        s.num("drag_max", forces.drag_max())
            .num("lift_max", forces.lift_max())
            .num("pressure_drop_final", forces.pressure_drop.last().copied().unwrap_or(f64::NAN));
        let mut t = Table::new(["t", "drag", "lift", "pressure_drop"]);
        for i in 0..forces.t.len() {
            t.push(
                [forces.t[i], forces.drag[i], forces.lift[i], forces.pressure_drop[i]]
                    .map(fmt_f64)
                    .to_vec(),
            );
        }
        write_csv(&t, &out.join("forces.csv"))?;
    }
    write_csv(&s.table(), &out.join("summary.csv"))?;
    eprintln!(
        "{} steps in {:.2} s{}",
        result.ledger.steps.len(),
        result.wall_time,
        if result.failed { ", with non-converged Step-1 solves" } else { "" }
    );
    Ok(Status::from_failed(result.failed || result.aborted))
}

fn require_taylor_green_square(cfg: &Config, command: &str) -> Result<(), CliError> {
    if cfg.problem != Problem::TaylorGreen {
        return Err(ConfigError::new("problem.kind", format!("{command} needs the taylor_green problem")).into());
    }
    if let Some(MeshSource::File(_)) = cfg.mesh {
        return Err(ConfigError::new("problem.mesh", format!("{command} runs on generated unit-square meshes")).into());
    }
    Ok(())
}

/// Rate table over `convergence.m_list` with `Δt = 1/m`: `rates.csv`.
pub fn cmd_convergence(cfg: &Config, out: &Path) -> Result<Status, CliError> {
    require_taylor_green_square(cfg, "convergence")?;
    let opts = ConvergenceOptions {
        spec: taylor_green_spec(cfg),
        t_final: cfg.t_final,
        scheme: cfg.scheme,
        settings: cfg.solver,
    };
    let n_steps_min = (opts.t_final * cfg.m_list[0] as f64).round();
    if n_steps_min < 2.0 {
        return Err(ConfigError::new("problem.t_final", "needs at least two steps on the coarsest level").into());
    }
    let table = taylor_green_convergence(&cfg.m_list, cfg.params, &opts)?;
    prepare_out(out)?;

    let mut header = vec!["m".to_string(), "dt".to_string()];
    for n in CONVERGENCE_NORMS {
        header.push(n.to_string());
        header.push(format!("{n}_rate"));
    }
    header.push("failed".into());
    let mut t = Table::new(header);
    for r in &table.rows {
        let mut row = vec![r.m.to_string(), fmt_f64(r.dt)];
        for (e, rate) in r.errors.iter().zip(&r.rates) {
            row.push(fmt_f64(*e));
            row.push(rate.map(fmt_f64).unwrap_or_default());
        }
        row.push(r.failed.to_string());
        t.push(row);
    }
    write_csv(&t, &out.join("rates.csv"))?;
    for r in &table.rows {
        let errs: Vec<String> = r.errors.iter().map(|e| format!("{e:.3e}")).collect();
        let rates: Vec<String> = r.rates.iter().map(|x| x.map_or("-".into(), |v| format!("{v:.2}"))).collect();
        println!("m = {:3}  errors {}  rates {}", r.m, errs.join(" "), rates.join(" "));
    }
    if let Some(f) = &table.failure {
        eprintln!("{f}");
    }
    Ok(Status::from_failed(table.partial || table.rows.iter().any(|r| r.failed)))
}

/// Iteration statistics over the `(scheme, γ, β)` grid: `sweep.csv`.
/// Wall times go to standard output only, so the file is reproducible.
pub fn cmd_sweep(cfg: &Config, out: &Path) -> Result<Status, CliError> {
    require_taylor_green_square(cfg, "sweep")?;
    let m = match cfg.mesh {
        Some(MeshSource::UnitSquare(m)) => m,
        _ => 32,
    };
    let entries = mgd_bench::sweep_grid(&cfg.sweep_schemes, &cfg.sweep_gammas, &cfg.sweep_betas);
    let opts = SweepOptions {
        m,
        t_final: cfg.t_final,
        spec: taylor_green_spec(cfg),
        settings: cfg.solver,
        stop_on_failure: cfg.stop_on_failure,
        parallel: cfg.parallel,
    };
    for e in &entries {
        StabilizationParams::new(e.gamma, e.beta)?;
    }
    let result = timing_sweep(&entries, &opts)?;
    prepare_out(out)?;

    let mut t = Table::new([
        "scheme",
        "gamma",
        "beta",
        "failed",
        "first_failure",
        "steps",
        "mean_iterations",
        "max_iterations",
    ]);
    for r in &result.rows {
        let SweepEntry { scheme, gamma, beta } = r.entry;
        t.push(vec![
            scheme.name().into(),
            fmt_f64(gamma),
            fmt_f64(beta),
            r.failed.to_string(),
            r.first_failure.map(|n| n.to_string()).unwrap_or_default(),
            r.steps.to_string(),
            fmt_f64(r.mean_iterations),
            r.max_iterations.to_string(),
        ]);
        println!(
            "{:>10}  gamma {:>8}  beta {:>6}  {:>7.2} s  mean iters {:>7.1}{}",
            scheme.name(),
            gamma,
            beta,
            r.wall_time,
            r.mean_iterations,
            if r.failed { "  F" } else { "" }
        );
    }
    write_csv(&t, &out.join("sweep.csv"))?;
    Ok(Status::from_failed(result.rows.iter().any(|r| r.failed)))
}

struct Check {
    name: &'static str,
    value: f64,
    threshold: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.value <= self.threshold
    }
}

fn max_energy_residual(ledger: &RunLedger) -> f64 {
    ledger
        .steps
        .iter()
        .filter_map(|r| r.energy_residual)
        .fold(0.0, f64::max)
}

/// Energy identity, stability bound and scheme equivalence on Taylor-Green
/// data: `check.csv`.
pub fn cmd_check(cfg: &Config, out: &Path) -> Result<Status, CliError> {
    require_taylor_green_square(cfg, "check")?;
    let m = match cfg.mesh {
        Some(MeshSource::UnitSquare(m)) => m,
        _ => 16,
    };
    let dt = cfg.dt.unwrap_or(1.0 / m as f64);
    let disc = Discretization::new(generate_unit_square(m));
    let spec = taylor_green_spec(cfg);
    let mut checks = Vec::new();

    let setup = spec.setup(dt, cfg.t_final, Scheme::Modular, cfg.params);
    let r = run(&disc, &setup, cfg.solver)?;
    checks.push(Check {
        name: "energy_identity_residual",
        value: max_energy_residual(&r.ledger),
        threshold: 1e-9,
    });

    // ω = 2 has a nonzero trace; the interpolant is used with its boundary
    // values replaced by zero, so the initial data lie in the discrete space.
    let decaying = TaylorGreenSpec::decaying(2.0, 1.0 / cfg.nu);
    let setup = ProblemSetup::new(cfg.nu, dt, cfg.t_final, Scheme::Modular, cfg.params)
        .with_dirichlet_default(|_, _| [0.0, 0.0])
        .with_initial(move |x| decaying.velocity(x, 0.0));
    let r = run(&disc, &setup, cfg.solver)?;
    let b = stability_budget(&r.ledger)?;
    let worst = b.lhs.iter().map(|l| l - b.rhs).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check {
        name: "stability_excess",
        value: worst / b.rhs.max(f64::MIN_POSITIVE),
        threshold: STABILITY_SLACK,
    });

    let mut levels = Vec::new();
    for scheme in [Scheme::Plain, Scheme::Modular] {
        let setup = spec.setup(dt, cfg.t_final, scheme, StabilizationParams::none());
        let mut v = Vec::new();
        run_with(&disc, &setup, cfg.solver, |s| v.push(s.state().u_curr.clone()))?;
        levels.push(v);
    }
    let mut diff = 0.0f64;
    for (a, b) in levels[0].iter().zip(&levels[1]) {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        diff = diff.max(norm_m(disc.ops(), &d)?);
    }
    checks.push(Check {
        name: "scheme_equivalence",
        value: diff,
        threshold: 1e-10,
    });

    prepare_out(out)?;
    let mut t = Table::new(["check", "value", "threshold", "pass"]);
    for c in &checks {
        t.push(vec![
            c.name.into(),
            fmt_f64(c.value),
            fmt_f64(c.threshold),
            c.pass().to_string(),
        ]);
        println!(
            "{} {}: {:.3e} (≤ {:.1e})",
            if c.pass() { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        );
    }
    write_csv(&t, &out.join("check.csv"))?;
    Ok(Status::from_failed(checks.iter().any(|c| !c.pass())))
}

/// `--out` wins over `[output] dir`.
pub fn output_dir(cfg: &Config, flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| cfg.out_dir.clone())
}
