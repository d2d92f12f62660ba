//! The grad-div post-solve `S u = rhs`, `S = aM + dG`, with cached
//! factorizations keyed on `(a, d)`.

use super::dirichlet::{eliminate, DirichletConstraints};
use super::StepperError;
use crate::fem::Discretization;
use crate::linalg::{spd_factorize, CsrMatrix, SpdFactorization};

struct Entry {
    key: (u64, u64),
    /// Unconstrained `S`, used to move boundary data to the right-hand side.
    full: CsrMatrix,
    constrained: CsrMatrix,
    factor: SpdFactorization,
}

/// Cached SPD solver for Step 2. The constrained dof set is fixed per run.
#[derive(Default)]
pub struct Step2Solver {
    entries: Vec<Entry>,
}

impl std::fmt::Debug for Step2Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Step2Solver")
            .field("factorizations", &self.entries.len())
            .finish()
    }
}

impl Step2Solver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of distinct matrices factorized so far.
    pub fn factorizations(&self) -> usize {
        self.entries.len()
    }

    fn entry(
        &mut self,
        disc: &Discretization,
        a: f64,
        d: f64,
        constraints: &DirichletConstraints,
    ) -> Result<&Entry, StepperError> {
        let key = (a.to_bits(), d.to_bits());
        if let Some(i) = self.entries.iter().position(|e| e.key == key) {
            return Ok(&self.entries[i]);
        }
        let ops = disc.ops();
        let full = CsrMatrix::combine(&[(a, &ops.m), (d, &ops.g)]);
        let mut constrained = full.clone();
        let mut scratch = vec![0.0; full.nrows()];
        let zeros = vec![0.0; full.nrows()];
        eliminate(&mut constrained, &mut scratch, constraints.mask(), &zeros);
        let factor = spd_factorize(&constrained)?;
        self.entries.push(Entry {
            key,
            full,
            constrained,
            factor,
        });
        Ok(self.entries.last().expect("just pushed"))
    }

    /// Solves with Dirichlet data imposed. Returns the solution and the
    /// relative residual of the constrained system.
    pub fn solve(
        &mut self,
        disc: &Discretization,
        a: f64,
        d: f64,
        rhs: &[f64],
        constraints: &DirichletConstraints,
    ) -> Result<(Vec<f64>, f64), StepperError> {
        let e = self.entry(disc, a, d, constraints)?;
        let n = rhs.len();
        let g = constraints.lifted(n);
        let sg = e.full.mul_vec(&g);
        let mask = constraints.mask();
        let b: Vec<f64> = (0..n)
            .map(|i| if mask[i] { g[i] } else { rhs[i] - sg[i] })
            .collect();
        let x = e.factor.solve(&b);
        let r = e.constrained.mul_vec(&x);
        let num: f64 = r.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rel = if den > 0.0 { num / den } else { num };
        Ok((x, rel))
    }

    /// The unconstrained matrix `aM + dG`, if already built.
    pub fn matrix(&self, a: f64, d: f64) -> Option<&CsrMatrix> {
        let key = (a.to_bits(), d.to_bits());
        self.entries.iter().find(|e| e.key == key).map(|e| &e.full)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_unit_square;
    use crate::stepper::{ProblemSetup, Scheme, StabilizationParams};

    fn homogeneous(d: &Discretization) -> DirichletConstraints {
        let s = ProblemSetup::new(1.0, 0.1, 1.0, Scheme::Modular, StabilizationParams::none())
            .with_dirichlet_default(|_, _| [0.0, 0.0]);
        DirichletConstraints::new(d, &s, 0.0).unwrap()
    }

    #[test]
    fn identity_when_no_graddiv() {
        let d = Discretization::new(generate_unit_square(4));
        let c = homogeneous(&d);
        let mut u_hat = d.interpolate_velocity(|p| [(3.0 * p[0]).sin() * p[1], p[0] * p[0]]).into_values();
        c.impose(&mut u_hat);
        let a = 1.5 / 0.1;
        let rhs: Vec<f64> = d.ops().m.mul_vec(&u_hat).iter().map(|v| a * v).collect();
        let mut s = Step2Solver::new();
        let (u, res) = s.solve(&d, a, 0.0, &rhs, &c).unwrap();
        assert!(res < 1e-12);
        for (x, y) in u.iter().zip(&u_hat) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn factorization_is_cached_per_key() {
        let d = Discretization::new(generate_unit_square(3));
        let c = homogeneous(&d);
        let rhs = vec![1.0; d.n_velocity()];
        let mut s = Step2Solver::new();
        s.solve(&d, 15.0, 2.0, &rhs, &c).unwrap();
        s.solve(&d, 15.0, 2.0, &rhs, &c).unwrap();
        assert_eq!(s.factorizations(), 1);
        s.solve(&d, 10.0, 2.0, &rhs, &c).unwrap();
        assert_eq!(s.factorizations(), 2);
    }

    #[test]
    fn spd_for_all_nonnegative_parameters() {
        for m in [1, 2, 4] {
            let d = Discretization::new(generate_unit_square(m));
            let c = homogeneous(&d);
            let mut s = Step2Solver::new();
            for dt in [1e-3, 0.1, 1.0] {
                for gamma in [0.0, 1.0, 2e4] {
                    for beta in [0.0, 0.2, 8e3] {
                        let a = 1.5 / dt;
                        let dd = 3.0 * beta / (2.0 * dt) + gamma;
                        s.solve(&d, a, dd, &vec![1.0; d.n_velocity()], &c).unwrap();
                    }
                }
            }
        }
    }
}
