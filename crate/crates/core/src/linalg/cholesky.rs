//! Envelope (skyline) Cholesky factorization under a reverse Cuthill-McKee
//! ordering. Fill-in of a Cholesky factor stays inside the row envelope, so
//! the storage is fixed by the pattern and the factorization is computed once
//! and reused for every right-hand side.

use super::{reverse_cuthill_mckee, CsrMatrix, LinalgError};

/// `P A Pᵀ = L Lᵀ`, stored row-wise over each row's envelope.
#[derive(Debug, Clone)]
pub struct SpdFactorization {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// First stored column of each (permuted) row.
    first: Vec<usize>,
    /// Offset of row `i` in `values`; row `i` holds columns `first[i]..=i`.
    offset: Vec<usize>,
    values: Vec<f64>,
}

/// Factorizes a symmetric positive definite matrix.
///
/// Symmetry is checked to `1e-10 · max(1, max|a_ij|)`.
pub fn spd_factorize(a: &CsrMatrix) -> Result<SpdFactorization, LinalgError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LinalgError::NotSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    let asym = a.max_asymmetry();
    if asym > 1e-10 * a.max_abs().max(1.0) {
        return Err(LinalgError::NotSymmetric(asym));
    }

    let perm = reverse_cuthill_mckee(a);
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }

    let mut first: Vec<usize> = (0..n).collect();
    for old_i in 0..n {
        let i = inv[old_i];
        let (cols, vals) = a.row(old_i);
        for (&old_j, &v) in cols.iter().zip(vals) {
            let j = inv[old_j];
            if j < i && v != 0.0 {
                first[i] = first[i].min(j);
            }
        }
    }
    let mut offset = Vec::with_capacity(n + 1);
    let mut total = 0usize;
    for i in 0..n {
        offset.push(total);
        total += i - first[i] + 1;
    }
    offset.push(total);

    let mut values = vec![0.0; total];
    for old_i in 0..n {
        let i = inv[old_i];
        let (cols, vals) = a.row(old_i);
        for (&old_j, &v) in cols.iter().zip(vals) {
            let j = inv[old_j];
            if j <= i && v != 0.0 {
                values[offset[i] + j - first[i]] = v;
            }
        }
    }

    for i in 0..n {
        let fi = first[i];
        for j in fi..i {
            let fj = first[j];
            let k0 = fi.max(fj);
            let s = {
                let ri = &values[offset[i] + k0 - fi..offset[i] + j - fi];
                let rj = &values[offset[j] + k0 - fj..offset[j] + j - fj];
                super::dot(ri, rj)
            };
            let ljj = values[offset[j] + j - fj];
            let idx = offset[i] + j - fi;
            values[idx] = (values[idx] - s) / ljj;
        }
        let row = &values[offset[i]..offset[i] + i - fi];
        let d = values[offset[i] + i - fi] - super::dot(row, row);
        if d <= 0.0 || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite(perm[i]));
        }
        values[offset[i] + i - fi] = d.sqrt();
    }

    Ok(SpdFactorization {
        n,
        perm,
        first,
        offset,
        values,
    })
}

impl SpdFactorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of the factor.
    pub fn factor_nnz(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "right-hand side length");
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        // L y = b
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.values[self.offset[i]..self.offset[i] + i - fi];
            let s = super::dot(row, &y[fi..i]);
            y[i] = (y[i] - s) / self.values[self.offset[i] + i - fi];
        }
        // Lᵀ x = y, column-oriented sweep over the row storage.
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let xi = y[i] / self.values[self.offset[i] + i - fi];
            y[i] = xi;
            let row = &self.values[self.offset[i]..self.offset[i] + i - fi];
            for (yk, l) in y[fi..i].iter_mut().zip(row) {
                *yk -= l * xi;
            }
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve_returns_rhs() {
        let f = spd_factorize(&CsrMatrix::identity(4)).unwrap();
        assert_eq!(f.solve(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn two_by_two_hand_elimination() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)],
        );
        let x = spd_factorize(&a).unwrap().solve(&[1.0, 2.0]);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-15);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)],
        );
        assert!(matches!(
            spd_factorize(&a),
            Err(LinalgError::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn asymmetric_is_rejected() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 0.5), (1, 1, 1.0)]);
        assert!(matches!(spd_factorize(&a), Err(LinalgError::NotSymmetric(_))));
    }

    #[test]
    fn poisson_residual_is_tiny() {
        let n = 200;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, t);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = spd_factorize(&a).unwrap().solve(&b);
        let r: Vec<f64> = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(crate::linalg::norm2(&r) / crate::linalg::norm2(&b) < 1e-12);
    }
}
