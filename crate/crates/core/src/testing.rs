//! Shared fixtures for unit tests.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::mesh::Point;
use crate::stepper::{ExactSolution, ProblemSetup, Scheme, StabilizationParams};

/// Decaying vortex with `ω = 1`, `τ = Re = 1/ν` (unforced).
pub fn vortex_velocity(x: Point, t: f64, nu: f64) -> [f64; 2] {
    let e = (-2.0 * PI * PI * t * nu).exp();
    [
        -(PI * x[0]).cos() * (PI * x[1]).sin() * e,
        (PI * x[0]).sin() * (PI * x[1]).cos() * e,
    ]
}

pub fn vortex_setup(nu: f64, dt: f64, t_final: f64, scheme: Scheme, params: StabilizationParams) -> ProblemSetup {
    let exact = ExactSolution {
        velocity: Arc::new(move |x, t| vortex_velocity(x, t, nu)),
        gradient: None,
        pressure: Some(Arc::new(move |x: Point, t: f64| {
            -0.25 * ((2.0 * PI * x[0]).cos() + (2.0 * PI * x[1]).cos()) * (-4.0 * PI * PI * t * nu).exp()
        })),
    };
    ProblemSetup::new(nu, dt, t_final, scheme, params)
        .with_dirichlet_default(move |x, t| vortex_velocity(x, t, nu))
        .with_initial(move |x| vortex_velocity(x, 0.0, nu))
        .with_exact(exact)
}

/// Field vanishing on the boundary of the unit square, with nonzero divergence.
pub fn bump(x: Point) -> [f64; 2] {
    let s = |v: f64| (PI * v).sin();
    [
        s(x[0]).powi(2) * (2.0 * PI * x[1]).sin() + 0.3 * s(x[0]) * s(x[1]),
        -(2.0 * PI * x[0]).sin() * s(x[1]).powi(2),
    ]
}

/// Unforced run from `bump` with homogeneous data.
pub fn homogeneous_setup(nu: f64, dt: f64, t_final: f64, scheme: Scheme, params: StabilizationParams) -> ProblemSetup {
    ProblemSetup::new(nu, dt, t_final, scheme, params)
        .with_dirichlet_default(|_, _| [0.0, 0.0])
        .with_initial(bump)
}
