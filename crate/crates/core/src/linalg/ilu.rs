//! Preconditioners for the Krylov solver.

use super::{CsrMatrix, LinalgError};

/// Applies an approximate inverse: `z = P⁻¹ r`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);

    fn name(&self) -> &'static str;
}

pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }

    fn name(&self) -> &'static str {
        "none"
    }
}

/// Diagonal scaling. Zero diagonal entries are treated as one.
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Self {
        let inv_diag = a
            .diagonal()
            .into_iter()
            .map(|d| if d != 0.0 && d.is_finite() { 1.0 / d } else { 1.0 })
            .collect();
        Self { inv_diag }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * d;
        }
    }

    fn name(&self) -> &'static str {
        "jacobi"
    }
}

/// Zero-fill incomplete LU on the pattern of `A`.
///
/// `L` (unit diagonal) is stored strictly below the diagonal, `U` on and
/// above it, both in the original CSR slots.
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

/// Pivots smaller than this fraction of the row's largest original entry are
/// reported as zero.
const PIVOT_TOL: f64 = 1e-14;

pub fn ilu0(a: &CsrMatrix) -> Result<Ilu0, LinalgError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LinalgError::NotSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        match a.find(i, i) {
            Some(k) => diag.push(k),
            None => return Err(LinalgError::ZeroPivot(i)),
        }
    }
    let row_scale: Vec<f64> = (0..n)
        .map(|i| a.row(i).1.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .collect();

    let mut lu = a.clone();
    let row_ptr = lu.row_ptr().to_vec();
    let col_idx = lu.col_idx().to_vec();
    let vals = lu.values_mut();
    // Column -> slot in the current row, usize::MAX when absent.
    let mut slot = vec![usize::MAX; n];

    for i in 0..n {
        let (rs, re) = (row_ptr[i], row_ptr[i + 1]);
        for k in rs..re {
            slot[col_idx[k]] = k;
        }
        for k in rs..re {
            let c = col_idx[k];
            if c >= i {
                break;
            }
            let pivot = vals[diag[c]];
            let lik = vals[k] / pivot;
            vals[k] = lik;
            if lik == 0.0 {
                continue;
            }
            for kk in diag[c] + 1..row_ptr[c + 1] {
                let s = slot[col_idx[kk]];
                if s != usize::MAX {
                    vals[s] -= lik * vals[kk];
                }
            }
        }
        let d = vals[diag[i]];
        if !d.is_finite() || d.abs() <= PIVOT_TOL * row_scale[i].max(f64::MIN_POSITIVE) {
            return Err(LinalgError::ZeroPivot(i));
        }
        for k in rs..re {
            slot[col_idx[k]] = usize::MAX;
        }
    }
    Ok(Ilu0 { lu, diag })
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.diag.len();
        let rp = self.lu.row_ptr();
        let ci = self.lu.col_idx();
        let v = self.lu.values();
        for i in 0..n {
            let mut s = r[i];
            for k in rp[i]..self.diag[i] {
                s -= v[k] * z[ci[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in self.diag[i] + 1..rp[i + 1] {
                s -= v[k] * z[ci[k]];
            }
            z[i] = s / v[self.diag[i]];
        }
    }

    fn name(&self) -> &'static str {
        "ilu0"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix_is_exact() {
        let a = CsrMatrix::from_triplets(3, 3, vec![(0, 0, 2.0), (1, 1, 4.0), (2, 2, -1.0)]);
        let p = ilu0(&a).unwrap();
        let mut z = vec![0.0; 3];
        p.apply(&[2.0, 4.0, 3.0], &mut z);
        assert_eq!(z, vec![1.0, 1.0, -3.0]);
    }

    #[test]
    fn tridiagonal_is_exact() {
        // ILU(0) of a tridiagonal matrix has no dropped fill, so it is exact.
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 3.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.5));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, t);
        let p = ilu0(&a).unwrap();
        let b = vec![1.0, 0.0, 2.0, -1.0, 0.5, 1.0];
        let mut z = vec![0.0; n];
        p.apply(&b, &mut z);
        let r = a.mul_vec(&z);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_diagonal_is_zero_pivot() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 0.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)],
        );
        assert_eq!(ilu0(&a).err(), Some(LinalgError::ZeroPivot(0)));
        let missing = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]);
        assert_eq!(ilu0(&missing).err(), Some(LinalgError::ZeroPivot(0)));
    }

    #[test]
    fn jacobi_treats_zero_diagonal_as_one() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 4.0), (1, 0, 1.0)]);
        let p = Jacobi::new(&a);
        let mut z = vec![0.0; 2];
        p.apply(&[2.0, 3.0], &mut z);
        assert_eq!(z, vec![0.5, 3.0]);
    }
}
