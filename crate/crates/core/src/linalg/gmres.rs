//! Restarted GMRES with left preconditioning.
//!
//! Convergence is decided in two stages: the Arnoldi cycle stops on the
//! preconditioned residual estimate, then the true residual `‖b − Ax‖/‖b‖`
//! is recomputed. A cycle whose estimate met the target while the true
//! residual did not tightens the internal target and restarts.

use std::time::Instant;

use super::{dot, norm2, CsrMatrix, Preconditioner};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub restart: usize,
    /// Relative tolerance on `‖b − Ax‖ / ‖b‖`.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            restart: 200,
            tol: 1e-8,
            max_iters: 2000,
        }
    }
}

/// Outcome of one linear solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub converged: bool,
    pub iterations: usize,
    pub final_relative_residual: f64,
    /// Seconds.
    pub wall_time: f64,
    pub breakdown_reason: Option<String>,
    /// Preconditioner actually used, e.g. `"ilu0"` or `"jacobi"` after a
    /// zero-pivot fallback.
    pub preconditioner: String,
}

impl SolverReport {
    pub fn direct(residual: f64, wall_time: f64, name: &str) -> Self {
        Self {
            converged: residual.is_finite(),
            iterations: 1,
            final_relative_residual: residual,
            wall_time,
            breakdown_reason: None,
            preconditioner: name.to_string(),
        }
    }
}

/// Orthogonality loss threshold triggering a second Gram-Schmidt pass.
const REORTH_THRESHOLD: f64 = 1e-3;

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64], r: &mut [f64]) {
    a.spmv_unchecked(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

/// Solves `A x = b` starting from `x0`.
///
/// On failure the iterate with the smallest true residual seen so far is
/// returned together with `converged = false`.
pub fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    x0: &[f64],
    opts: &GmresOptions,
    precond: &dyn Preconditioner,
) -> (Vec<f64>, SolverReport) {
    let start = Instant::now();
    let n = b.len();
    assert_eq!(a.nrows(), n);
    assert_eq!(a.ncols(), n);
    assert_eq!(x0.len(), n);

    let report = |converged: bool, iterations: usize, res: f64, reason: Option<String>| SolverReport {
        converged,
        iterations,
        final_relative_residual: res,
        wall_time: start.elapsed().as_secs_f64(),
        breakdown_reason: reason,
        preconditioner: precond.name().to_string(),
    };

    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return (vec![0.0; n], report(true, 0, 0.0, None));
    }

    let m = opts.restart.max(1);
    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    residual(a, &x, b, &mut r);
    let mut true_rel = norm2(&r) / bnorm;
    let mut best = (true_rel, x.clone());
    if true_rel <= opts.tol {
        return (x, report(true, 0, true_rel, None));
    }

    precond.apply(b, &mut z);
    let pb_norm = norm2(&z);
    let mut target = opts.tol;
    let mut iters = 0usize;

    let mut v: Vec<Vec<f64>> = (0..=m).map(|_| vec![0.0; n]).collect();
    let mut h = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut w = vec![0.0; n];

    loop {
        precond.apply(&r, &mut z);
        let beta = norm2(&z);
        if !beta.is_finite() {
            return (
                best.1,
                report(false, iters, best.0, Some("non-finite preconditioned residual".into())),
            );
        }
        for (vi, zi) in v[0].iter_mut().zip(&z) {
            *vi = zi / beta;
        }
        g.iter_mut().for_each(|x| *x = 0.0);
        g[0] = beta;

        let mut k_used = 0;
        let mut estimate_met = false;
        let mut breakdown: Option<String> = None;
        for j in 0..m {
            if iters >= opts.max_iters {
                break;
            }
            iters += 1;
            a.spmv_unchecked(&v[j], &mut w);
            precond.apply(&w, &mut z);
            let before = norm2(&z);
            for i in 0..=j {
                let hij = dot(&z, &v[i]);
                h[i][j] = hij;
                for (zk, vk) in z.iter_mut().zip(&v[i]) {
                    *zk -= hij * vk;
                }
            }
            let mut after = norm2(&z);
            if after < REORTH_THRESHOLD * before {
                for i in 0..=j {
                    let c = dot(&z, &v[i]);
                    h[i][j] += c;
                    for (zk, vk) in z.iter_mut().zip(&v[i]) {
                        *zk -= c * vk;
                    }
                }
                after = norm2(&z);
            }
            h[j + 1][j] = after;
            if !after.is_finite() || h[..=j].iter().any(|row| !row[j].is_finite()) {
                breakdown = Some("non-finite value in Krylov recurrence".into());
                break;
            }
            let happy = after <= f64::EPSILON * before.max(f64::MIN_POSITIVE);
            if !happy {
                for (vk, zk) in v[j + 1].iter_mut().zip(&z) {
                    *vk = zk / after;
                }
            }
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = h[j][j].hypot(h[j + 1][j]);
            if denom == 0.0 {
                breakdown = Some("singular Hessenberg matrix".into());
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = h[j + 1][j] / denom;
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            k_used = j + 1;
            if g[j + 1].abs() <= target * pb_norm || happy {
                estimate_met = true;
                break;
            }
        }

        if k_used > 0 {
            let mut y = vec![0.0; k_used];
            for i in (0..k_used).rev() {
                let s: f64 = (i + 1..k_used).map(|l| h[i][l] * y[l]).sum();
                y[i] = (g[i] - s) / h[i][i];
            }
            for (i, yi) in y.iter().enumerate() {
                for (xk, vk) in x.iter_mut().zip(&v[i]) {
                    *xk += yi * vk;
                }
            }
        }
        residual(a, &x, b, &mut r);
        true_rel = norm2(&r) / bnorm;
        if !true_rel.is_finite() {
            let reason = breakdown.unwrap_or_else(|| "non-finite residual".into());
            return (best.1, report(false, iters, best.0, Some(reason)));
        }
        if true_rel < best.0 {
            best = (true_rel, x.clone());
        }
        if true_rel <= opts.tol {
            return (x, report(true, iters, true_rel, None));
        }
        if let Some(reason) = breakdown {
            return (best.1, report(false, iters, best.0, Some(reason)));
        }
        if iters >= opts.max_iters {
            return (
                best.1,
                report(false, iters, best.0, Some("maximum iterations reached".into())),
            );
        }
        if estimate_met {
            // The preconditioned estimate was optimistic; aim lower.
            target = (target * 0.5 * opts.tol / true_rel).max(f64::EPSILON);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ilu0, Identity};

    fn poisson(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let a = CsrMatrix::identity(5);
        let b = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let (x, rep) = gmres(&a, &b, &[0.0; 5], &GmresOptions::default(), &Identity);
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_system() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (1, 1, 3.0)]);
        let (x, rep) = gmres(&a, &[2.0, 3.0], &[0.0; 2], &GmresOptions::default(), &Identity);
        assert!(rep.converged);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let a = poisson(4);
        let (x, rep) = gmres(&a, &[0.0; 4], &[1.0; 4], &GmresOptions::default(), &Identity);
        assert!(rep.converged);
        assert_eq!(x, vec![0.0; 4]);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let a = poisson(100);
        let b = vec![1.0; 100];
        let opts = GmresOptions {
            restart: 5,
            tol: 1e-12,
            max_iters: 10,
        };
        let (_, rep) = gmres(&a, &b, &vec![0.0; 100], &opts, &Identity);
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 10);
        assert_eq!(rep.breakdown_reason.as_deref(), Some("maximum iterations reached"));
    }

    #[test]
    fn ilu_preconditioned_diagonal_takes_one_iteration() {
        let a = CsrMatrix::from_triplets(3, 3, vec![(0, 0, 2.0), (1, 1, 5.0), (2, 2, 7.0)]);
        let p = ilu0(&a).unwrap();
        let (_, rep) = gmres(&a, &[1.0, 1.0, 1.0], &[0.0; 3], &GmresOptions::default(), &p);
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
    }
}
