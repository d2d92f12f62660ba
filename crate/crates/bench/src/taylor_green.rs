//! The Taylor-Green vortex on `[0,1]²`:
//!
//! `u = (−cos(ωπx) sin(ωπy), sin(ωπx) cos(ωπy)) e^{−2ω²π²t/τ}`,
//! `p = −¼(cos(2ωπx) + cos(2ωπy)) e^{−4ω²π²t/τ}`.
//!
//! The field solves the Navier-Stokes equations with `ν = 1/Re` and the body
//! force `f = 2ω²π²(ν − 1/τ) u`, which vanishes when `τ = Re`.

use std::f64::consts::PI;
use std::sync::Arc;

use mgd_core::mesh::Point;
use mgd_core::stepper::{ExactSolution, ProblemSetup, Scheme, StabilizationParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorGreenSpec {
    pub omega: f64,
    pub tau: f64,
    pub re: f64,
}

impl Default for TaylorGreenSpec {
    /// `ω = 1`, `τ = Re = 100`.
    fn default() -> Self {
        Self {
            omega: 1.0,
            tau: 100.0,
            re: 100.0,
        }
    }
}

impl TaylorGreenSpec {
    pub fn new(omega: f64, tau: f64, re: f64) -> Self {
        Self { omega, tau, re }
    }

    /// Unforced vortex, `τ = Re`.
    pub fn decaying(omega: f64, re: f64) -> Self {
        Self { omega, tau: re, re }
    }

    pub fn nu(&self) -> f64 {
        1.0 / self.re
    }

    pub fn is_unforced(&self) -> bool {
        self.tau == self.re
    }

    fn k(&self) -> f64 {
        self.omega * PI
    }

    fn decay(&self, t: f64) -> f64 {
        (-2.0 * self.k() * self.k() * t / self.tau).exp()
    }

    pub fn velocity(&self, x: Point, t: f64) -> [f64; 2] {
        let k = self.k();
        let e = self.decay(t);
        [
            -(k * x[0]).cos() * (k * x[1]).sin() * e,
            (k * x[0]).sin() * (k * x[1]).cos() * e,
        ]
    }

    /// `grad[c][d] = ∂u_c/∂x_d`.
    pub fn gradient(&self, x: Point, t: f64) -> [[f64; 2]; 2] {
        let k = self.k();
        let e = self.decay(t);
        let (sx, cx) = (k * x[0]).sin_cos();
        let (sy, cy) = (k * x[1]).sin_cos();
        [[k * sx * sy * e, -k * cx * cy * e], [k * cx * cy * e, -k * sx * sy * e]]
    }

    pub fn pressure(&self, x: Point, t: f64) -> f64 {
        let k = self.k();
        let e = self.decay(t);
        -0.25 * ((2.0 * k * x[0]).cos() + (2.0 * k * x[1]).cos()) * e * e
    }

    pub fn forcing(&self, x: Point, t: f64) -> [f64; 2] {
        let c = 2.0 * self.k() * self.k() * (self.nu() - 1.0 / self.tau);
        let u = self.velocity(x, t);
        [c * u[0], c * u[1]]
    }

    /// `u_t + (u·∇)u − νΔu + ∇p − f` from independently coded derivatives.
    pub fn strong_residual(&self, x: Point, t: f64) -> [f64; 2] {
        let k = self.k();
        let lam = 2.0 * k * k / self.tau;
        let e = (-lam * t).exp();
        let (sx, cx) = (k * x[0]).sin_cos();
        let (sy, cy) = (k * x[1]).sin_cos();
        let u = [-cx * sy * e, sx * cy * e];
        let ut = [lam * cx * sy * e, -lam * sx * cy * e];
        let du = [[k * sx * sy * e, -k * cx * cy * e], [k * cx * cy * e, -k * sx * sy * e]];
        let lap = [
            k * k * cx * sy * e + k * k * cx * sy * e,
            -k * k * sx * cy * e - k * k * sx * cy * e,
        ];
        let e2 = e * e;
        let gp = [
            0.5 * k * (2.0 * k * x[0]).sin() * e2,
            0.5 * k * (2.0 * k * x[1]).sin() * e2,
        ];
        let f = self.forcing(x, t);
        let nu = self.nu();
        let mut r = [0.0; 2];
        for c in 0..2 {
            let conv = u[0] * du[c][0] + u[1] * du[c][1];
            r[c] = ut[c] + conv - nu * lap[c] + gp[c] - f[c];
        }
        r
    }

    pub fn exact(&self) -> ExactSolution {
        let (a, b, c) = (*self, *self, *self);
        ExactSolution {
            velocity: Arc::new(move |x, t| a.velocity(x, t)),
            gradient: Some(Arc::new(move |x, t| b.gradient(x, t))),
            pressure: Some(Arc::new(move |x, t| c.pressure(x, t))),
        }
    }

    /// Exact initial and boundary data, the closed-form force when `τ ≠ Re`,
    /// and the registered exact solution.
    pub fn setup(&self, dt: f64, t_final: f64, scheme: Scheme, params: StabilizationParams) -> ProblemSetup {
        let s = *self;
        let mut setup = ProblemSetup::new(self.nu(), dt, t_final, scheme, params)
            .with_dirichlet_default(move |x, t| s.velocity(x, t))
            .with_initial(move |x| s.velocity(x, 0.0))
            .with_exact(self.exact());
        if !self.is_unforced() {
            setup = setup.with_body_force(move |x, t| s.forcing(x, t));
        }
        setup
    }
}
