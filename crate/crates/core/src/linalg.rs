//! Small dense linear algebra: LU with partial pivoting and least squares.
//!
//! Matrices are row-major slices of length `n * n`.

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Real;

/// LU factorisation `P A = L U` of a square complex matrix.
#[derive(Clone, Debug)]
pub struct Lu<T: Real> {
    n: usize,
    lu: Vec<Complex<T>>,
    piv: Vec<usize>,
    singular: bool,
}

impl<T: Real> Lu<T> {
    pub fn new(a: &[Complex<T>], n: usize) -> Self {
        assert_eq!(a.len(), n * n, "matrix is not n x n");
        let mut lu = a.to_vec();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].norm();
            for i in k + 1..n {
                let v = lu[i * n + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let d = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] = lu[i * n + j] - f * u;
                }
            }
        }
        Self { n, lu, piv, singular }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Option<Vec<Complex<T>>> {
        if self.singular {
            return None;
        }
        let n = self.n;
        let mut x: Vec<Complex<T>> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s = s - self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Vec<Complex<T>>> {
        let n = self.n;
        let mut inv = vec![Complex::zero(); n * n];
        let mut e = vec![Complex::zero(); n];
        for j in 0..n {
            e.fill(Complex::zero());
            e[j] = Complex::new(T::one(), T::zero());
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        Some(inv)
    }
}

/// Maximum absolute column sum.
pub fn norm1<T: Real>(a: &[Complex<T>], n: usize) -> T {
    (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].norm()).fold(T::zero(), |s, v| s + v))
        .fold(T::zero(), T::max)
}

pub fn matmul<T: Real>(a: &[Complex<T>], b: &[Complex<T>], n: usize) -> Vec<Complex<T>> {
    let mut out = vec![Complex::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                out[i * n + j] = out[i * n + j] + aik * b[k * n + j];
            }
        }
    }
    out
}

pub fn matvec<T: Real>(a: &[Complex<T>], x: &[Complex<T>], n: usize) -> Vec<Complex<T>> {
    (0..n)
        .map(|i| (0..n).fold(Complex::zero(), |s, j| s + a[i * n + j] * x[j]))
        .collect()
}

/// Solve the real system `A x = b` by Gaussian elimination with partial
/// pivoting; `None` when `A` is numerically singular.
pub fn solve_real(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n * n);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))?;
        if a[p * n + k].abs() <= 1e-14 * scale {
            return None;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        for i in k + 1..n {
            let f = a[i * n + k] / a[k * n + k];
            for j in k..n {
                a[i * n + j] -= f * a[k * n + j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i * n + j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i * n + i];
    }
    Some(x)
}

/// Least-squares solution of the overdetermined system with `rows` of the
/// design matrix, via the normal equations.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let p = rows.first()?.len();
    if rows.len() < p {
        return None;
    }
    let mut ata = vec![0.0; p * p];
    let mut aty = vec![0.0; p];
    for (r, &yi) in rows.iter().zip(y) {
        for i in 0..p {
            aty[i] += r[i] * yi;
            for j in 0..p {
                ata[i * p + j] += r[i] * r[j];
            }
        }
    }
    solve_real(ata, aty)
}
