//! Banded LU with partial pivoting, applied after a reverse Cuthill-McKee
//! reordering of the symmetrized pattern.

use super::{reverse_cuthill_mckee, CsrMatrix, LinalgError};

#[derive(Debug, Clone)]
pub struct LuFactorization {
    n: usize,
    perm: Vec<usize>,
    kl: usize,
    /// Width of each stored row of `U`: columns `i..i + width`.
    width: usize,
    /// Row `i` holds `U[i][i..i + width]`.
    upper: Vec<f64>,
    /// Column `k` holds the multipliers for rows `k+1..=k+kl`.
    lower: Vec<f64>,
    pivots: Vec<usize>,
}

/// Relative pivot threshold below which the matrix is declared singular.
const SINGULAR_TOL: f64 = 1e-13;

pub fn direct_lu(a: &CsrMatrix) -> Result<LuFactorization, LinalgError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LinalgError::NotSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    let perm = reverse_cuthill_mckee(a);
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let (mut kl, mut ku) = (0usize, 0usize);
    for old_i in 0..n {
        let (cols, vals) = a.row(old_i);
        for (&old_j, &v) in cols.iter().zip(vals) {
            if v == 0.0 {
                continue;
            }
            let (i, j) = (inv[old_i], inv[old_j]);
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
    }
    // Each row is stored over columns i-kl ..= i+kl+ku (pivoting widens U).
    let full = 2 * kl + ku + 1;
    let mut work = vec![0.0; n * full];
    let at = |i: usize, j: usize| i * full + (j + kl - i);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for old_i in 0..n {
        let (cols, vals) = a.row(old_i);
        for (&old_j, &v) in cols.iter().zip(vals) {
            if v != 0.0 {
                work[at(inv[old_i], inv[old_j])] = v;
            }
        }
    }

    let mut lower = vec![0.0; n * kl.max(1)];
    let mut pivots = vec![0usize; n];
    for k in 0..n {
        let last_row = (k + kl).min(n - 1);
        let mut p = k;
        let mut pmax = work[at(k, k)].abs();
        for i in k + 1..=last_row {
            let v = work[at(i, k)].abs();
            if v > pmax {
                pmax = v;
                p = i;
            }
        }
        if pmax <= SINGULAR_TOL * scale {
            return Err(LinalgError::SingularMatrix(perm[k]));
        }
        pivots[k] = p;
        let last_col = (k + kl + ku).min(n - 1);
        if p != k {
            for j in k..=last_col {
                work.swap(at(k, j), at(p, j));
            }
        }
        let pivot = work[at(k, k)];
        for i in k + 1..=last_row {
            let l = work[at(i, k)] / pivot;
            lower[k * kl + (i - k - 1)] = l;
            work[at(i, k)] = 0.0;
            if l != 0.0 {
                for j in k + 1..=last_col {
                    work[at(i, j)] -= l * work[at(k, j)];
                }
            }
        }
    }

    let width = kl + ku + 1;
    let mut upper = vec![0.0; n * width];
    for i in 0..n {
        for d in 0..width {
            let j = i + d;
            if j < n {
                upper[i * width + d] = work[at(i, j)];
            }
        }
    }
    Ok(LuFactorization {
        n,
        perm,
        kl,
        width,
        upper,
        lower,
        pivots,
    })
}

impl LuFactorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.width - 1 - self.kl)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "right-hand side length");
        let n = self.n;
        let kl = self.kl;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            y.swap(k, self.pivots[k]);
            let yk = y[k];
            if yk != 0.0 {
                for t in 0..kl.min(n - 1 - k) {
                    y[k + 1 + t] -= self.lower[k * kl + t] * yk;
                }
            }
        }
        for i in (0..n).rev() {
            let row = &self.upper[i * self.width..(i + 1) * self.width];
            let mut s = y[i];
            for d in 1..self.width.min(n - i) {
                s -= row[d] * y[i + d];
            }
            y[i] = s / row[0];
        }
        let mut x = vec![0.0; n];
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
    fn permutation_matrix_solves_exactly() {
        let a = CsrMatrix::from_triplets(3, 3, vec![(0, 2, 1.0), (1, 0, 1.0), (2, 1, 1.0)]);
        let x = direct_lu(&a).unwrap().solve(&[1.0, 2.0, 3.0]);
        assert_eq!(x, vec![2.0, 3.0, 1.0]);
    }

    #[test]
    fn structurally_singular_is_rejected() {
        let a = CsrMatrix::from_triplets(3, 3, vec![(0, 0, 1.0), (0, 1, 1.0), (2, 2, 1.0)]);
        assert!(matches!(direct_lu(&a), Err(LinalgError::SingularMatrix(_))));
    }

    #[test]
    fn saddle_point_with_zero_block() {
        // [[2, 1], [1, 0]] needs a row interchange.
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 0.0)],
        );
        let x = direct_lu(&a).unwrap().solve(&[3.0, 1.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }
}
