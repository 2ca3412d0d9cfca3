//! Small dense matrix kernels (parameter dimension is at most 3, Gram
//! matrices stay below ten rows). Row-major storage, no external linear
//! algebra dependency.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    n: usize,
    a: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat {
            n,
            a: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Mat::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    /// Replace with the symmetric average (A + A^T)/2; returns the largest
    /// absolute asymmetry that was removed.
    pub fn symmetrize(&mut self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let d = self.get(i, j) - self.get(j, i);
                worst = worst.max(d.abs());
                let avg = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, avg);
                self.set(j, i, avg);
            }
        }
        worst
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.n, other.n);
        Mat::from_fn(self.n, |i, j| {
            (0..self.n).map(|k| self.get(i, k) * other.get(k, j)).sum()
        })
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> f64 {
        let n = self.n;
        let mut a = self.a.clone();
        let mut sign = 1.0;
        let mut det = 1.0;
        for col in 0..n {
            let mut piv = col;
            for r in (col + 1)..n {
                if a[r * n + col].abs() > a[piv * n + col].abs() {
                    piv = r;
                }
            }
            if a[piv * n + col] == 0.0 {
                return 0.0;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                sign = -sign;
            }
            det *= a[col * n + col];
            for r in (col + 1)..n {
                let factor = a[r * n + col] / a[col * n + col];
                for j in col..n {
                    a[r * n + j] -= factor * a[col * n + j];
                }
            }
        }
        sign * det
    }

    /// Inverse by Gauss-Jordan with partial pivoting. Errors when the
    /// estimated condition number exceeds 1e12.
    pub fn inverse(&self) -> Result<Mat> {
        let n = self.n;
        let mut a = self.a.clone();
        let mut inv = Mat::identity(n);
        let norm_a = self.max_abs();
        for col in 0..n {
            let mut piv = col;
            for r in (col + 1)..n {
                if a[r * n + col].abs() > a[piv * n + col].abs() {
                    piv = r;
                }
            }
            let pval = a[piv * n + col];
            if pval.abs() <= 1e-300 {
                return Err(Error::SingularMatrix(f64::INFINITY));
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                    let tmp = inv.get(col, j);
                    inv.set(col, j, inv.get(piv, j));
                    inv.set(piv, j, tmp);
                }
            }
            let d = a[col * n + col];
            for j in 0..n {
                a[col * n + j] /= d;
                inv.set(col, j, inv.get(col, j) / d);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[r * n + col];
                if factor == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[r * n + j] -= factor * a[col * n + j];
                    inv.set(r, j, inv.get(r, j) - factor * inv.get(col, j));
                }
            }
        }
        let cond = norm_a * inv.max_abs() * n as f64;
        if cond > 1e12 {
            return Err(Error::SingularMatrix(cond));
        }
        Ok(inv)
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
    /// returned in ascending order.
    pub fn eigenvalues_sym(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = self.clone();
        let scale = a.max_abs();
        if scale == 0.0 {
            return vec![0.0; n];
        }
        for _sweep in 0..64 {
            let mut off = 0.0_f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    off = off.max(a.get(i, j).abs());
                }
            }
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let app = a.get(p, p);
                    let aqq = a.get(q, q);
                    let tau = (aqq - app) / (2.0 * apq);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        eig
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn inverse_of_diagonal() {
        let m = Mat::diag(&[2.0, 2.0, 1.0]);
        let inv = m.inverse().unwrap();
        assert_abs_diff_eq!(inv.get(0, 0), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(inv.get(1, 1), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(inv.get(2, 2), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigenvalues_of_identity() {
        let eig = Mat::identity(3).eigenvalues_sym();
        for &e in &eig {
            assert_abs_diff_eq!(e, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn determinant_of_cholesky_information_diagonal() {
        // diag(2 t1^-2, 2 t2^-2, t1^-2 t2^2) at t = (1, 1, .)
        let m = Mat::diag(&[2.0, 2.0, 1.0]);
        assert_abs_diff_eq!(m.det(), 4.0, epsilon = 1e-13);
    }

    #[test]
    fn symmetric_eigen_two_by_two() {
        let mut m = Mat::zeros(2);
        m.set(0, 0, 2.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 2.0);
        let eig = m.eigenvalues_sym();
        assert_abs_diff_eq!(eig[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn ill_conditioned_inverse_errors() {
        let m = Mat::diag(&[1.0, 1e-14]);
        assert!(m.inverse().is_err());
    }
}
