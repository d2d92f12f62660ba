//! Channel `[0,40]×[0,10]` with a unit step on the bottom wall at `x ∈ [5,6]`.
//! Inlet and outlet carry the profile `u = (y(10 − y)/25, 0)`, all other
//! walls are no-slip, `f = 0`.

use mgd_core::diagnostics::RunLedger;
use mgd_core::mesh::{generate_rect_union, Axis, Mesh, Rect, TagRule};
use mgd_core::stepper::{run_with, ProblemSetup, RunOutput, Scheme, SolverSettings, StabilizationParams};
use mgd_core::Discretization;

use crate::BenchError;

pub const CHANNEL_LENGTH: f64 = 40.0;
pub const CHANNEL_HEIGHT: f64 = 10.0;

/// Step channel mesh with spacing `h` (must divide 1). Tags: `"inlet"`,
/// `"outlet"`, `"wall"`.
pub fn step_channel_mesh(h: f64) -> Result<Mesh, BenchError> {
    let rects = [
        Rect::new(0.0, 5.0, 0.0, CHANNEL_HEIGHT),
        Rect::new(5.0, 6.0, 1.0, CHANNEL_HEIGHT),
        Rect::new(6.0, CHANNEL_LENGTH, 0.0, CHANNEL_HEIGHT),
    ];
    let rules = [
        TagRule::new(Axis::X, 0.0, "inlet"),
        TagRule::new(Axis::X, CHANNEL_LENGTH, "outlet"),
    ];
    Ok(generate_rect_union(&rects, h, &rules, "wall")?)
}

pub fn inflow_profile(y: f64) -> f64 {
    y * (CHANNEL_HEIGHT - y) / 25.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelStart {
    /// Zero interior velocity with the boundary data imposed.
    Rest,
    /// Steady Stokes flow for the boundary data.
    Stokes,
}

#[derive(Debug, Clone)]
pub struct StepChannelOptions {
    pub h: f64,
    pub nu: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Multiplies the inflow/outflow profile.
    pub inflow_scale: f64,
    pub start: ChannelStart,
    pub settings: SolverSettings,
}

impl Default for StepChannelOptions {
    fn default() -> Self {
        Self {
            h: 0.5,
            nu: 1.0 / 600.0,
            dt: 0.01,
            t_final: 40.0,
            inflow_scale: 1.0,
            start: ChannelStart::Stokes,
            settings: SolverSettings::default(),
        }
    }
}

pub fn step_channel_setup(opts: &StepChannelOptions, scheme: Scheme, params: StabilizationParams) -> ProblemSetup {
    let a = opts.inflow_scale;
    let profile = move |x: [f64; 2], _t: f64| [a * inflow_profile(x[1]), 0.0];
    let setup = ProblemSetup::new(opts.nu, opts.dt, opts.t_final, scheme, params)
        .with_dirichlet("inlet", profile)
        .with_dirichlet("outlet", profile)
        .with_dirichlet("wall", |_, _| [0.0, 0.0]);
    match opts.start {
        ChannelStart::Rest => setup.with_initial(|_| [0.0, 0.0]),
        ChannelStart::Stokes => setup.with_stokes_initial(),
    }
}

/// `(tⁿ, ‖∇·uⁿ‖)` for `n = 0..N`.
pub fn divergence_series(ledger: &RunLedger) -> Vec<(f64, f64)> {
    ledger.records().map(|r| (r.t, r.div_u)).collect()
}

/// Full run from the configured start.
pub fn step_channel_run(
    disc: &Discretization,
    opts: &StepChannelOptions,
    scheme: Scheme,
    params: StabilizationParams,
) -> Result<RunOutput, BenchError> {
    let setup = step_channel_setup(opts, scheme, params);
    Ok(run_with(disc, &setup, opts.settings, |_| {})?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_shape_and_tags() {
        let mesh = step_channel_mesh(1.0).unwrap();
        let m = mesh.metrics();
        assert!((m.area_total - (400.0 - 1.0)).abs() < 1e-10);
        for tag in ["inlet", "outlet", "wall"] {
            assert!(mesh.tag_id(tag).is_some(), "{tag}");
        }
        assert!(step_channel_mesh(0.3).is_err());
    }

    #[test]
    fn default_mesh_size() {
        let d = Discretization::new(step_channel_mesh(0.5).unwrap());
        let dofs = d.n_velocity() + d.n_pressure();
        assert!(dofs >= 8000, "{dofs}");
    }

    #[test]
    fn inflow_peak() {
        assert_eq!(inflow_profile(5.0), 1.0);
        assert_eq!(inflow_profile(0.0), 0.0);
        assert_eq!(inflow_profile(10.0), 0.0);
    }

    #[test]
    fn zero_inflow_gives_zero_solution() {
        let disc = Discretization::new(step_channel_mesh(1.0).unwrap());
        let opts = StepChannelOptions {
            h: 1.0,
            t_final: 0.03,
            inflow_scale: 0.0,
            ..Default::default()
        };
        for start in [ChannelStart::Rest, ChannelStart::Stokes] {
            let o = StepChannelOptions { start, ..opts.clone() };
            let out = step_channel_run(&disc, &o, Scheme::Modular, StabilizationParams::new(1.0, 0.0).unwrap()).unwrap();
            assert!(out.state.u_curr.iter().all(|&v| v == 0.0));
            assert!(divergence_series(&out.ledger).iter().all(|&(_, d)| d == 0.0));
        }
    }
}
