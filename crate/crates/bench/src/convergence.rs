//! Error tables under joint refinement `Δt = 1/m` and pairwise rate fits.

use mgd_core::diagnostics::{aggregate_norms, Quantity};
use mgd_core::mesh::generate_unit_square;
use mgd_core::stepper::{run, Scheme, SolverSettings, StabilizationParams};
use mgd_core::Discretization;

use crate::{BenchError, TaylorGreenSpec};

/// Pairwise rates `log(e_{i−1}/e_i) / log(m_i/m_{i−1})`.
pub fn fit_rate(errors: &[f64], resolutions: &[f64]) -> Result<Vec<f64>, BenchError> {
    if errors.len() != resolutions.len() {
        return Err(BenchError::InvalidInput(format!(
            "{} errors for {} resolutions",
            errors.len(),
            resolutions.len()
        )));
    }
    if let Some((i, &e)) = errors.iter().enumerate().find(|(_, e)| !(**e > 0.0)) {
        return Err(BenchError::NonPositiveError { index: i, value: e });
    }
    if resolutions.windows(2).any(|w| !(w[1] > w[0])) || resolutions.iter().any(|&m| !(m > 0.0)) {
        return Err(BenchError::InvalidInput("resolutions must be positive and ascending".into()));
    }
    Ok(errors
        .windows(2)
        .zip(resolutions.windows(2))
        .map(|(e, m)| (e[0] / e[1]).ln() / (m[1] / m[0]).ln())
        .collect())
}

/// Norms reported per refinement level.
pub const CONVERGENCE_NORMS: [&str; 4] = ["u_linf_l2", "div_linf_l2", "div_l2_l2", "p_l2_l2"];

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub m: usize,
    pub dt: f64,
    /// One value per entry of [`CONVERGENCE_NORMS`].
    pub errors: Vec<f64>,
    /// Rates relative to the previous row; `None` on the first row.
    pub rates: Vec<Option<f64>>,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateTable {
    pub norms: Vec<String>,
    pub rows: Vec<RateRow>,
    /// The study stopped before the last resolution.
    pub partial: bool,
    pub failure: Option<String>,
}

impl RateTable {
    pub fn column(&self, norm: &str) -> Option<Vec<f64>> {
        let k = self.norms.iter().position(|n| n == norm)?;
        Some(self.rows.iter().map(|r| r.errors[k]).collect())
    }

    pub fn rates(&self, norm: &str) -> Option<Vec<f64>> {
        let k = self.norms.iter().position(|n| n == norm)?;
        Some(self.rows.iter().filter_map(|r| r.rates[k]).collect())
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceOptions {
    pub spec: TaylorGreenSpec,
    pub t_final: f64,
    pub scheme: Scheme,
    pub settings: SolverSettings,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            spec: TaylorGreenSpec::default(),
            t_final: 1.0,
            scheme: Scheme::Modular,
            settings: SolverSettings::default(),
        }
    }
}

/// Errors of one Taylor-Green run on `generate_unit_square(m)` with `Δt = 1/m`,
/// in [`CONVERGENCE_NORMS`] order.
pub fn taylor_green_errors(
    m: usize,
    params: StabilizationParams,
    opts: &ConvergenceOptions,
) -> Result<(Vec<f64>, bool), BenchError> {
    let disc = Discretization::new(generate_unit_square(m));
    let setup = opts.spec.setup(1.0 / m as f64, opts.t_final, opts.scheme, params);
    let out = run(&disc, &setup, opts.settings)?;
    let l = &out.ledger;
    let errors = vec![
        aggregate_norms(l, Quantity::VelocityError)?.sup,
        aggregate_norms(l, Quantity::DivergenceError)?.sup,
        aggregate_norms(l, Quantity::DivergenceError)?.l2,
        aggregate_norms(l, Quantity::PressureError)?.l2,
    ];
    Ok((errors, out.failed))
}

/// Runs the study for ascending `m_list`. A failing level ends the study
/// with the rows computed so far and `partial` set.
pub fn taylor_green_convergence(
    m_list: &[usize],
    params: StabilizationParams,
    opts: &ConvergenceOptions,
) -> Result<RateTable, BenchError> {
    if m_list.is_empty() || m_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(BenchError::InvalidInput("m list must be nonempty and ascending".into()));
    }
    let mut table = RateTable {
        norms: CONVERGENCE_NORMS.iter().map(|s| s.to_string()).collect(),
        ..Default::default()
    };
    for &m in m_list {
        let (errors, failed) = match taylor_green_errors(m, params, opts) {
            Ok(v) => v,
            Err(e) => {
                table.partial = true;
                table.failure = Some(format!("m = {m}: {e}"));
                break;
            }
        };
        let rates = match table.rows.last() {
            Some(prev) => prev
                .errors
                .iter()
                .zip(&errors)
                .map(|(&a, &b)| fit_rate(&[a, b], &[prev.m as f64, m as f64]).ok().map(|r| r[0]))
                .collect(),
            None => vec![None; errors.len()],
        };
        table.rows.push(RateRow {
            m,
            dt: 1.0 / m as f64,
            errors,
            rates,
            failed,
        });
        if failed {
            table.partial = m != *m_list.last().expect("nonempty");
            table.failure = Some(format!("m = {m}: a Step-1 solve did not converge"));
            break;
        }
    }
    Ok(table)
}
