use std::sync::Arc;

use super::*;
use crate::diagnostics::norm_m;
use crate::fem::{l2_error, Discretization};
use crate::linalg::GmresOptions;
use crate::mesh::generate_unit_square;
use crate::testing::{homogeneous_setup, vortex_setup, vortex_velocity};

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `u = (x², −2xy)`, `p = x − ½`, steady Stokes with `f = (1 − 2ν, 0)`.
fn stokes_setup(nu: f64, scheme: Scheme, params: StabilizationParams) -> ProblemSetup {
    let u = |x: Point, _t: f64| [x[0] * x[0], -2.0 * x[0] * x[1]];
    let exact = ExactSolution {
        velocity: Arc::new(u),
        gradient: None,
        pressure: Some(Arc::new(|x: Point, _| x[0] - 0.5)),
    };
    ProblemSetup::new(nu, 0.1, 0.4, scheme, params)
        .with_dirichlet_default(u)
        .with_initial(move |x| u(x, 0.0))
        .with_body_force(move |_, _| [1.0 - 2.0 * nu, 0.0])
        .with_exact(exact)
        .without_convection()
}

#[test]
fn stokes_polynomial_solution_is_reproduced() {
    let disc = Discretization::new(generate_unit_square(4));
    let u_ex = disc.interpolate_velocity(|x| [x[0] * x[0], -2.0 * x[0] * x[1]]).into_values();
    let mut p_ex = disc.interpolate_pressure(|x| x[0] - 0.5).into_values();
    let mean = disc.pressure_mean(&p_ex);
    p_ex.iter_mut().for_each(|v| *v -= mean);
    let params = StabilizationParams::new(1.0, 0.2).unwrap();
    for scheme in [Scheme::Plain, Scheme::Monolithic, Scheme::Modular] {
        for settings in [SolverSettings::default(), SolverSettings::direct()] {
            let setup = stokes_setup(0.1, scheme, params);
            let out = run(&disc, &setup, settings).unwrap();
            assert!(!out.failed);
            let du = max_diff(&out.state.u_curr, &u_ex);
            assert!(du < 1e-10, "{scheme} {settings:?} {du} {:?}", out.state.reports);
            let dp = max_diff(&out.state.p_curr, &p_ex);
            assert!(dp < 1e-10, "{scheme} {settings:?} {dp} {:?}", out.state.reports);
        }
    }
}

#[test]
fn homogeneous_problem_stays_zero() {
    let disc = Discretization::new(generate_unit_square(3));
    let setup = ProblemSetup::new(0.1, 0.1, 0.3, Scheme::Modular, StabilizationParams::new(1.0, 0.2).unwrap())
        .with_dirichlet_default(|_, _| [0.0, 0.0]);
    let mut st = TimeStepper::new(&disc, &setup, SolverSettings::default()).unwrap();
    st.startup().unwrap();
    assert!(st.state().u_curr.iter().all(|&v| v == 0.0));
    st.advance().unwrap();
    let s = st.state();
    assert!(s.u_hat.iter().chain(&s.u_curr).chain(&s.p_curr).all(|&v| v == 0.0));
}

#[test]
fn modular_without_graddiv_keeps_step1_velocity() {
    let disc = Discretization::new(generate_unit_square(5));
    let setup = vortex_setup(0.01, 0.1, 0.4, Scheme::Modular, StabilizationParams::none());
    let mut st = TimeStepper::new(&disc, &setup, SolverSettings::default()).unwrap();
    st.startup().unwrap();
    for _ in 0..3 {
        let o = st.advance().unwrap();
        assert!(o.s2_residual.unwrap() < 1e-12);
        assert!(max_diff(&st.state().u_curr, &st.state().u_hat) < 1e-12);
    }
}

#[test]
fn step2_preserves_divergence_free_fields() {
    let disc = Discretization::new(generate_unit_square(4));
    let rot = |x: Point, _t: f64| [x[1], -x[0]];
    let setup = ProblemSetup::new(0.1, 0.1, 0.2, Scheme::Modular, StabilizationParams::new(3.0, 0.7).unwrap())
        .with_dirichlet_default(rot);
    let c = DirichletConstraints::new(&disc, &setup, 0.1).unwrap();
    let u = disc.interpolate_velocity(|x| rot(x, 0.0)).into_values();
    let (dt, gamma, beta) = (0.1, 3.0, 0.7);
    let a = 1.5 / dt;
    let ops = disc.ops();
    let hist: Vec<f64> = u.iter().map(|v| 3.0 * v / (2.0 * dt)).collect();
    let mu = ops.m.mul_vec(&u);
    let gh = ops.g.mul_vec(&hist);
    let rhs: Vec<f64> = mu.iter().zip(&gh).map(|(m, g)| a * m + beta * g).collect();
    let mut s2 = Step2Solver::new();
    let (x, _) = s2.solve(&disc, a, beta * a + gamma, &rhs, &c).unwrap();
    assert!(max_diff(&x, &u) < 1e-12);
}

#[test]
fn plain_and_unstabilized_modular_coincide() {
    let disc = Discretization::new(generate_unit_square(5));
    let mk = |scheme| vortex_setup(0.01, 0.1, 0.5, scheme, StabilizationParams::none());
    let (plain, modular, mono) = (mk(Scheme::Plain), mk(Scheme::Modular), mk(Scheme::Monolithic));
    let mut traj: Vec<Vec<Vec<f64>>> = Vec::new();
    for setup in [&plain, &modular, &mono] {
        let mut levels = Vec::new();
        run_with(&disc, setup, SolverSettings::default(), |s| levels.push(s.state().u_curr.clone())).unwrap();
        traj.push(levels);
    }
    for (k, l) in traj[0].iter().enumerate() {
        for other in &traj[1..] {
            let d = norm_m(disc.ops(), &sub(l, &other[k])).unwrap();
            assert!(d < 1e-10, "level {k}: {d}");
        }
    }
}

#[test]
fn step1_velocity_is_discretely_incompressible() {
    let disc = Discretization::new(generate_unit_square(6));
    let params = StabilizationParams::new(1.0, 0.2).unwrap();
    for scheme in [Scheme::Plain, Scheme::Modular, Scheme::Monolithic] {
        let setup = vortex_setup(0.01, 0.1, 0.4, scheme, params);
        let settings = SolverSettings::default();
        let mut st = TimeStepper::new(&disc, &setup, settings).unwrap();
        st.startup().unwrap();
        for _ in 0..3 {
            st.advance().unwrap();
            let s = st.state();
            let bu = disc.ops().b.mul_vec(&s.u_hat);
            let norm: f64 = bu[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            let bound = 10.0 * settings.tolerance() * norm_m(disc.ops(), &s.u_hat).unwrap();
            assert!(norm <= bound, "{scheme}: {norm} > {bound}");
        }
    }
}

#[test]
fn graddiv_step_reduces_divergence() {
    let disc = Discretization::new(generate_unit_square(16));
    let setup = vortex_setup(0.01, 1.0 / 16.0, 0.25, Scheme::Modular, StabilizationParams::new(1.0, 0.2).unwrap());
    let mut st = TimeStepper::new(&disc, &setup, SolverSettings::default()).unwrap();
    st.startup().unwrap();
    for _ in 0..2 {
        let o = st.advance().unwrap();
        assert!(o.report.unwrap().converged);
        let g = |u: &[f64]| crate::diagnostics::norm_g(disc.ops(), u).unwrap();
        assert!(g(&st.state().u_curr) < g(&st.state().u_hat));
    }
}

#[test]
fn startup_uses_exact_interpolant() {
    let nu = 0.01;
    let mut errs = Vec::new();
    for m in [4, 8] {
        let disc = Discretization::new(generate_unit_square(m));
        let setup = vortex_setup(nu, 0.1, 0.2, Scheme::Modular, StabilizationParams::none());
        let mut st = TimeStepper::new(&disc, &setup, SolverSettings::default()).unwrap();
        let o = st.startup().unwrap();
        assert!(o.report.is_none());
        assert_eq!(st.state().n, 1);
        errs.push(l2_error(disc.mesh(), disc.dofmap(), &st.state().u_curr, |x| vortex_velocity(x, 0.1, nu)));
    }
    let rate = (errs[0] / errs[1]).log2();
    assert!(rate > 2.7, "interpolation rate {rate}");
}

#[test]
fn backward_euler_startup_from_rest() {
    let disc = Discretization::new(generate_unit_square(3));
    let setup = ProblemSetup::new(0.1, 0.1, 0.2, Scheme::Modular, StabilizationParams::new(1.0, 0.2).unwrap())
        .with_dirichlet_default(|_, _| [0.0, 0.0]);
    let mut st = TimeStepper::new(&disc, &setup, SolverSettings::default()).unwrap();
    let o = st.startup().unwrap();
    assert!(o.report.is_some());
    assert!(!st.last_terms().unwrap().bdf2);
    assert!(st.state().u_curr.iter().all(|&v| v == 0.0));
}

#[test]
fn failed_solves_are_recorded_and_run_completes() {
    let disc = Discretization::new(generate_unit_square(4));
    let setup = homogeneous_setup(0.01, 0.1, 0.4, Scheme::Plain, StabilizationParams::none());
    let settings = SolverSettings {
        linear: LinearSolver::Gmres(GmresOptions {
            restart: 2,
            tol: 1e-14,
            max_iters: 2,
        }),
        preconditioner: PreconditionerKind::None,
    };
    let out = run(&disc, &setup, settings).unwrap();
    assert!(out.failed);
    assert_eq!(out.first_failure, Some(1));
    assert_eq!(out.ledger.steps.len(), setup.n_steps());
    assert!(out.ledger.failed());
}

#[test]
fn pressure_has_zero_mean() {
    let disc = Discretization::new(generate_unit_square(5));
    let setup = vortex_setup(0.01, 0.1, 0.3, Scheme::Modular, StabilizationParams::new(1.0, 0.2).unwrap());
    let out = run(&disc, &setup, SolverSettings::default()).unwrap();
    assert!(disc.pressure_mean(&out.state.p_curr).abs() < 1e-13);
}

#[test]
fn invalid_setups_are_rejected() {
    assert!(StabilizationParams::new(-1.0, 0.0).is_err());
    assert!(StabilizationParams::new(0.0, -0.1).is_err());
    let disc = Discretization::new(generate_unit_square(2));
    let short = homogeneous_setup(0.1, 0.1, 0.1, Scheme::Modular, StabilizationParams::none());
    assert!(matches!(
        TimeStepper::new(&disc, &short, SolverSettings::default()),
        Err(StepperError::InvalidSetup(_))
    ));
    let nodata = ProblemSetup::new(0.1, 0.1, 0.2, Scheme::Plain, StabilizationParams::none());
    assert!(matches!(
        TimeStepper::new(&disc, &nodata, SolverSettings::default()),
        Err(StepperError::MissingBoundaryData(_))
    ));
}

#[test]
fn scheme_names_round_trip() {
    for s in [Scheme::Plain, Scheme::Monolithic, Scheme::Modular] {
        assert_eq!(Scheme::parse(s.name()), Some(s));
    }
    assert_eq!(Scheme::parse("mgd"), Some(Scheme::Modular));
    assert_eq!(Scheme::parse("bdf3"), None);
}
