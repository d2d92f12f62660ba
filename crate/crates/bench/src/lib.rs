//! Benchmark problems for the mgd solver: the Taylor-Green vortex, flow over
//! a step, flow past a cylinder, grad-div parameter sweeps and convergence
//! studies.

pub mod convergence;
pub mod cylinder;
pub mod step_channel;
pub mod sweep;
pub mod taylor_green;

pub use convergence::{fit_rate, taylor_green_convergence, ConvergenceOptions, RateRow, RateTable, CONVERGENCE_NORMS};
pub use cylinder::{cylinder_mesh, cylinder_run, CylinderMeshOptions, CylinderOptions, CylinderResult};
pub use step_channel::{step_channel_mesh, step_channel_run, ChannelStart, StepChannelOptions};
pub use sweep::{
    re_robustness, sweep_grid, timing_sweep, RobustnessOptions, RobustnessRow, SweepEntry, SweepOptions, SweepResult,
    SweepRow,
};
pub use taylor_green::TaylorGreenSpec;

use thiserror::Error;

use mgd_core::diagnostics::DiagnosticsError;
use mgd_core::mesh::MeshError;
use mgd_core::stepper::StepperError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("error {index} is not positive ({value})")]
    NonPositiveError { index: usize, value: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Stepper(#[from] StepperError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}
