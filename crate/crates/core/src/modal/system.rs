use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm1, Lu};
use crate::scalar::Real;

/// Condition number above which `Z(omega)` is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Linear structure `M y'' + C y' + K y = f` with real row-major `n x n`
/// matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalSystem<T: Real = f64> {
    pub n_dof: usize,
    pub mass: Vec<T>,
    pub damping: Vec<T>,
    pub stiffness: Vec<T>,
}

fn is_symmetric<T: Real>(a: &[T], n: usize) -> bool {
    let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tol = T::lit(1e-12) * scale.max(T::min_positive_value());
    (0..n).all(|i| (0..i).all(|j| (a[i * n + j] - a[j * n + i]).abs() <= tol))
}

/// Cholesky-style test: every pivot positive (or, for `semi`, non-negative
/// up to rounding).
fn is_definite<T: Real>(a: &[T], n: usize, semi: bool) -> bool {
    let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tol = T::lit(1e-10) * scale;
    let mut l = vec![T::zero(); n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d = d - l[j * n + k] * l[j * n + k];
        }
        if d <= T::zero() {
            if semi && d >= -tol {
                // zero pivot: the remaining column must vanish too
                for i in j + 1..n {
                    let mut s = a[i * n + j];
                    for k in 0..j {
                        s = s - l[i * n + k] * l[j * n + k];
                    }
                    if s.abs() > tol {
                        return false;
                    }
                }
                continue;
            }
            return false;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    true
}

impl<T: Real> ModalSystem<T> {
    pub fn new(n_dof: usize, mass: Vec<T>, damping: Vec<T>, stiffness: Vec<T>) -> Result<Self> {
        let sys = Self {
            n_dof,
            mass,
            damping,
            stiffness,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_dof;
        if n == 0 {
            return Err(Error::InvalidInput("modal system needs at least one degree of freedom".into()));
        }
        for (name, m) in [("mass", &self.mass), ("damping", &self.damping), ("stiffness", &self.stiffness)] {
            if m.len() != n * n {
                return Err(Error::InvalidInput(format!("{name} matrix must be {n}x{n}")));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} matrix has non-finite entries")));
            }
            if !is_symmetric(m, n) {
                return Err(Error::InvalidInput(format!("{name} matrix is not symmetric")));
            }
        }
        if !is_definite(&self.mass, n, false) {
            return Err(Error::InvalidInput("mass matrix is not positive definite".into()));
        }
        if !is_definite(&self.stiffness, n, true) {
            return Err(Error::InvalidInput("stiffness matrix is not positive semidefinite".into()));
        }
        Ok(())
    }

    /// Single degree of freedom.
    pub fn sdof(m: T, c: T, k: T) -> Result<Self> {
        Self::new(1, vec![m], vec![c], vec![k])
    }

    /// Uncoupled system with the given per-DOF parameters.
    pub fn diagonal(m: &[T], c: &[T], k: &[T]) -> Result<Self> {
        let n = m.len();
        if c.len() != n || k.len() != n {
            return Err(Error::InvalidInput("diagonal parameter lists differ in length".into()));
        }
        let diag = |v: &[T]| {
            let mut out = vec![T::zero(); n * n];
            for i in 0..n {
                out[i * n + i] = v[i];
            }
            out
        };
        Self::new(n, diag(m), diag(c), diag(k))
    }

    /// Spring-mass chain fixed at one end: masses `m`, springs `k` between
    /// consecutive masses, dashpots `c` in parallel with the springs.
    pub fn chain(m: &[T], c: &[T], k: &[T]) -> Result<Self> {
        let n = m.len();
        if c.len() != n || k.len() != n {
            return Err(Error::InvalidInput("chain parameter lists differ in length".into()));
        }
        let band = |v: &[T]| {
            let mut out = vec![T::zero(); n * n];
            for i in 0..n {
                out[i * n + i] = v[i] + if i + 1 < n { v[i + 1] } else { T::zero() };
                if i + 1 < n {
                    out[i * n + i + 1] = -v[i + 1];
                    out[(i + 1) * n + i] = -v[i + 1];
                }
            }
            out
        };
        let mut mass = vec![T::zero(); n * n];
        for i in 0..n {
            mass[i * n + i] = m[i];
        }
        Self::new(n, mass, band(c), band(k))
    }

    pub fn cast<U: Real>(&self) -> ModalSystem<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::lit(x.as_f64())).collect();
        ModalSystem {
            n_dof: self.n_dof,
            mass: conv(&self.mass),
            damping: conv(&self.damping),
            stiffness: conv(&self.stiffness),
        }
    }
}

/// `Z(omega) = -omega^2 M + j omega C + K`.
pub fn dynamic_stiffness<T: Real>(sys: &ModalSystem<T>, omega: T) -> Vec<Complex<T>> {
    let w2 = omega * omega;
    sys.mass
        .iter()
        .zip(&sys.damping)
        .zip(&sys.stiffness)
        .map(|((&m, &c), &k)| Complex::new(k - w2 * m, omega * c))
        .collect()
}

/// Dynamic flexibility `H = Z^-1` on a grid of angular frequencies.
#[derive(Clone, Debug)]
pub struct FrequencyResponse<T: Real = f64> {
    pub omegas: Vec<T>,
    /// `None` where `Z` is singular (resonance).
    pub h: Vec<Option<Vec<Complex<T>>>>,
    /// 1-norm condition number of `Z` per grid point (infinite if singular).
    pub condition: Vec<T>,
    pub n_dof: usize,
}

impl<T: Real> FrequencyResponse<T> {
    pub fn is_singular(&self, i: usize) -> bool {
        self.h[i].is_none()
    }

    /// `|H[row][col]|` per grid point, `None` where singular.
    pub fn magnitude(&self, row: usize, col: usize) -> Vec<Option<T>> {
        self.h
            .iter()
            .map(|h| h.as_ref().map(|m| m[row * self.n_dof + col].norm()))
            .collect()
    }
}

struct Factored<T: Real> {
    lu: Lu<T>,
    inverse: Vec<Complex<T>>,
    condition: T,
}

fn factor<T: Real>(sys: &ModalSystem<T>, omega: T) -> Option<Factored<T>> {
    let n = sys.n_dof;
    let z = dynamic_stiffness(sys, omega);
    let lu = Lu::new(&z, n);
    let inverse = lu.inverse()?;
    let condition = norm1(&z, n) * norm1(&inverse, n);
    if !condition.is_finite() || condition > T::lit(SINGULAR_CONDITION) {
        return None;
    }
    Some(Factored { lu, inverse, condition })
}

pub fn frequency_response<T: Real>(sys: &ModalSystem<T>, omegas: &[T]) -> Result<FrequencyResponse<T>> {
    sys.validate()?;
    let mut h = Vec::with_capacity(omegas.len());
    let mut condition = Vec::with_capacity(omegas.len());
    for &w in omegas {
        match factor(sys, w) {
            Some(f) => {
                h.push(Some(f.inverse));
                condition.push(f.condition);
            }
            None => {
                h.push(None);
                condition.push(T::infinity());
            }
        }
    }
    if h.iter().all(Option::is_none) {
        return Err(Error::DegenerateGrid);
    }
    Ok(FrequencyResponse {
        omegas: omegas.to_vec(),
        h,
        condition,
        n_dof: sys.n_dof,
    })
}

/// Steady-state response `y` to the harmonic force `f` at `omega`.
pub fn forced_response<T: Real>(sys: &ModalSystem<T>, f: &[Complex<T>], omega: T) -> Result<Vec<Complex<T>>> {
    sys.validate()?;
    if f.len() != sys.n_dof {
        return Err(Error::InvalidInput(format!("force has {} entries for {} DOF", f.len(), sys.n_dof)));
    }
    let fac = factor(sys, omega).ok_or(Error::Resonance { omega: omega.as_f64() })?;
    Ok(fac.lu.solve(f).expect("non-singular factorisation"))
}
