//! The Step-1 saddle-point system `[[F, −Bᵀ], [−B, 0]]` on a fixed pattern,
//! velocity unknowns first, pressure last.

use std::time::Instant;

use super::dirichlet::DirichletConstraints;
use super::{LinearSolver, PreconditionerKind, SolverSettings};
use crate::fem::Discretization;
use crate::linalg::{direct_lu, gmres, ilu0, CsrMatrix, Identity, Jacobi, Preconditioner, SolverReport};

/// Pressure dof pinned to zero during the solve.
const PINNED_PRESSURE: usize = 0;

#[derive(Debug, Clone)]
pub struct SaddleSystem {
    nv: usize,
    np: usize,
    matrix: CsrMatrix,
    /// Saddle positions of the velocity-pattern entries, in CSR order.
    pv_pos: Vec<usize>,
    bt_pos: Vec<usize>,
    b_pos: Vec<usize>,
    pdiag_pos: Vec<usize>,
}

impl SaddleSystem {
    pub fn new(disc: &Discretization) -> Self {
        let pv = disc.pattern().matrix();
        let ops = disc.ops();
        let (nv, np) = (disc.n_velocity(), disc.n_pressure());
        let n = nv + np;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(pv.nnz() + 2 * ops.b.nnz() + np);
        let mut pv_pos = Vec::with_capacity(pv.nnz());
        let mut bt_pos = Vec::with_capacity(ops.bt.nnz());
        let mut b_pos = Vec::with_capacity(ops.b.nnz());
        let mut pdiag_pos = Vec::with_capacity(np);
        row_ptr.push(0);
        for i in 0..nv {
            for &j in pv.row(i).0 {
                pv_pos.push(col_idx.len());
                col_idx.push(j);
            }
            for &j in ops.bt.row(i).0 {
                bt_pos.push(col_idx.len());
                col_idx.push(nv + j);
            }
            row_ptr.push(col_idx.len());
        }
        for k in 0..np {
            for &j in ops.b.row(k).0 {
                b_pos.push(col_idx.len());
                col_idx.push(j);
            }
            pdiag_pos.push(col_idx.len());
            col_idx.push(nv + k);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        let matrix = CsrMatrix::from_raw(n, n, row_ptr, col_idx, vec![0.0; nnz]);
        Self {
            nv,
            np,
            matrix,
            pv_pos,
            bt_pos,
            b_pos,
            pdiag_pos,
        }
    }

    pub fn dim(&self) -> usize {
        self.nv + self.np
    }

    /// Current (possibly constrained) matrix.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Fills the unconstrained system with `F = Σ cₖ Xₖ`; every `Xₖ` must carry
    /// the shared velocity pattern.
    pub fn assemble(&mut self, disc: &Discretization, velocity_terms: &[(f64, &CsrMatrix)]) {
        let ops = disc.ops();
        let vals = self.matrix.values_mut();
        for (k, &pos) in self.pv_pos.iter().enumerate() {
            vals[pos] = velocity_terms.iter().map(|(c, m)| c * m.values()[k]).sum();
        }
        for (&pos, &v) in self.bt_pos.iter().zip(ops.bt.values()) {
            vals[pos] = -v;
        }
        for (&pos, &v) in self.b_pos.iter().zip(ops.b.values()) {
            vals[pos] = -v;
        }
        for &pos in &self.pdiag_pos {
            vals[pos] = 0.0;
        }
    }

    /// Eliminates the constraints and the pinned pressure, solves, and removes
    /// the discrete pressure mean. Returns `(u, p, report)`.
    ///
    /// Constrained rows keep their diagonal entry (a scaled identity row), so
    /// the relative residual is not dominated by the boundary data.
    pub fn solve(
        &mut self,
        disc: &Discretization,
        rhs_velocity: &[f64],
        constraints: &DirichletConstraints,
        x0: &[f64],
        settings: &SolverSettings,
    ) -> (Vec<f64>, Vec<f64>, SolverReport) {
        let n = self.dim();
        let mut rhs = vec![0.0; n];
        rhs[..self.nv].copy_from_slice(rhs_velocity);
        let mut mask = vec![false; n];
        mask[..self.nv].copy_from_slice(constraints.mask());
        mask[self.nv + PINNED_PRESSURE] = true;
        let g = constraints.lifted(n);
        self.eliminate_scaled(&mut rhs, &mask, &g);
        // Warm start in the pinned gauge, with the constrained values in place.
        let mut x0 = x0.to_vec();
        let shift = x0[self.nv + PINNED_PRESSURE];
        x0[self.nv..].iter_mut().for_each(|v| *v -= shift);
        for (i, x) in x0[..self.nv].iter_mut().enumerate() {
            if mask[i] {
                *x = g[i];
            }
        }

        let (x, report) = match settings.linear {
            LinearSolver::Gmres(opts) => {
                let ilu;
                let jacobi;
                let mut fallback = None;
                let pc: &dyn Preconditioner = match settings.preconditioner {
                    PreconditionerKind::Ilu0 => match ilu0(&self.matrix) {
                        Ok(p) => {
                            ilu = p;
                            &ilu
                        }
                        Err(e) => {
                            fallback = Some(e.to_string());
                            jacobi = Jacobi::new(&self.matrix);
                            &jacobi
                        }
                    },
                    PreconditionerKind::Jacobi => {
                        jacobi = Jacobi::new(&self.matrix);
                        &jacobi
                    }
                    PreconditionerKind::None => &Identity,
                };
                let (x, mut report) = gmres(&self.matrix, &rhs, &x0, &opts, pc);
                if let Some(reason) = fallback {
                    report.preconditioner = format!("jacobi (ilu0 fallback: {reason})");
                }
                (x, report)
            }
            LinearSolver::Direct => {
                let start = Instant::now();
                match direct_lu(&self.matrix) {
                    Ok(lu) => {
                        let x = lu.solve(&rhs);
                        let r = self.matrix.mul_vec(&x);
                        let res: f64 = r.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                        let bn = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
                        let rel = if bn > 0.0 { res / bn } else { res };
                        (x, SolverReport::direct(rel, start.elapsed().as_secs_f64(), "banded-lu"))
                    }
                    Err(e) => {
                        let mut rep = SolverReport::direct(f64::NAN, start.elapsed().as_secs_f64(), "banded-lu");
                        rep.converged = false;
                        rep.breakdown_reason = Some(e.to_string());
                        (x0, rep)
                    }
                }
            }
        };
        let u = x[..self.nv].to_vec();
        let mut p = x[self.nv..].to_vec();
        let mean = disc.pressure_mean(&p);
        p.iter_mut().for_each(|v| *v -= mean);
        (u, p, report)
    }

    fn eliminate_scaled(&mut self, rhs: &mut [f64], mask: &[bool], g: &[f64]) {
        let n = self.dim();
        let row_ptr = self.matrix.row_ptr().to_vec();
        let cols = self.matrix.col_idx().to_vec();
        let vals = self.matrix.values_mut();
        for i in 0..n {
            let range = row_ptr[i]..row_ptr[i + 1];
            if mask[i] {
                let mut d = 1.0;
                for k in range {
                    if cols[k] == i && vals[k] != 0.0 {
                        d = vals[k];
                    }
                    vals[k] = 0.0;
                }
                let k = (row_ptr[i]..row_ptr[i + 1]).find(|&k| cols[k] == i).expect("diagonal in pattern");
                vals[k] = d;
                rhs[i] = d * g[i];
            } else {
                for k in range {
                    let j = cols[k];
                    if mask[j] {
                        rhs[i] -= vals[k] * g[j];
                        vals[k] = 0.0;
                    }
                }
            }
        }
    }
}
