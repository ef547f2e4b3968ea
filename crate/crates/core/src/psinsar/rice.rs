use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this argument the Bessel functions use their power series.
const SERIES_LIMIT: f64 = 30.0;

fn bessel_series(x: f64, order: u32) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (k + order as f64));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum * (-x).exp()
}

fn bessel_asymptotic(x: f64, order: u32) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..30 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (k as f64 * 8.0 * x);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (std::f64::consts::TAU * x).sqrt()
}

/// Exponentially scaled modified Bessel function `e^-x I0(x)`, `x >= 0`.
pub fn bessel_i0e(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        bessel_series(x, 0)
    } else {
        bessel_asymptotic(x, 0)
    }
}

/// Exponentially scaled modified Bessel function `e^-x I1(x)`, `x >= 0`.
pub fn bessel_i1e(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        bessel_series(x, 1)
    } else {
        bessel_asymptotic(x, 1)
    }
}

/// Rice density of amplitude `a` for signal `nu` and noise `sigma`.
pub fn rice_pdf(a: f64, nu: f64, sigma: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::Domain(format!("amplitude must be non-negative, got {a}")));
    }
    if !(sigma > 0.0 && nu >= 0.0) {
        return Err(Error::Domain(format!("need sigma > 0 and nu >= 0, got nu {nu}, sigma {sigma}")));
    }
    let s2 = sigma * sigma;
    let d = a - nu;
    Ok(a / s2 * (-d * d / (2.0 * s2)).exp() * bessel_i0e(a * nu / s2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiceStatus {
    Regular,
    /// No detectable signal: `nu = 0`, dispersion undefined.
    Rayleigh,
    /// Zero sample variance: `sigma = 0`.
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiceFit {
    pub nu: f64,
    pub sigma: f64,
    /// Amplitude dispersion `sigma / nu` (infinite when `nu = 0`).
    pub d_a: f64,
    pub status: RiceStatus,
}

impl RiceFit {
    /// Inverse stability `1 / (1 + d_a)` in `[0, 1]`.
    pub fn stability(&self) -> f64 {
        1.0 / (1.0 + self.d_a)
    }
}

pub const MIN_SAMPLES: usize = 8;
const MAX_ITERATIONS: usize = 20;
/// Sampling spread of `mean / std` for Rayleigh data is about this over sqrt(N).
const RAYLEIGH_RATIO_SPREAD: f64 = 1.35;

/// Correction factor `xi(theta)` relating Rice variance to `sigma^2`.
fn xi(theta: f64) -> f64 {
    let t2 = theta * theta;
    let x = 0.25 * t2;
    let b = (2.0 + t2) * bessel_i0e(x) + t2 * bessel_i1e(x);
    2.0 + t2 - std::f64::consts::PI / 8.0 * b * b
}

/// Moment-based Rice fit with fixed-point refinement of the SNR.
///
/// Ratios `mean / std` within two sampling deviations of the Rayleigh value
/// are treated as signal-free.
pub fn fit_rice(amplitudes: &[f64]) -> Result<RiceFit> {
    let n = amplitudes.len();
    if n < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!("{n} samples, need at least {MIN_SAMPLES}")));
    }
    if amplitudes.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
        return Err(Error::Domain("amplitudes must be finite and non-negative".into()));
    }
    let mean = amplitudes.iter().sum::<f64>() / n as f64;
    let var = amplitudes.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64;
    if var <= 1e-24 * mean * mean || var == 0.0 {
        return Ok(RiceFit {
            nu: mean,
            sigma: 0.0,
            d_a: if mean > 0.0 { 0.0 } else { f64::INFINITY },
            status: RiceStatus::Degenerate,
        });
    }
    let sd = var.sqrt();
    let r = mean / sd;
    let rayleigh = (std::f64::consts::PI / (4.0 - std::f64::consts::PI)).sqrt();
    if r <= rayleigh + 2.0 * RAYLEIGH_RATIO_SPREAD / (n as f64).sqrt() {
        // second moment of a Rayleigh law is 2 sigma^2
        let m2 = amplitudes.iter().map(|a| a * a).sum::<f64>() / n as f64;
        return Ok(RiceFit {
            nu: 0.0,
            sigma: (0.5 * m2).sqrt(),
            d_a: f64::INFINITY,
            status: RiceStatus::Rayleigh,
        });
    }
    let mut theta = r - rayleigh;
    for _ in 0..MAX_ITERATIONS {
        let next = (xi(theta) * (1.0 + r * r) - 2.0).max(0.0).sqrt();
        let done = (next - theta).abs() < 1e-12 * theta.max(1.0);
        theta = next;
        if done {
            break;
        }
    }
    let sigma = sd / xi(theta).sqrt();
    let nu = (mean * mean + (xi(theta) - 2.0) * sigma * sigma).max(0.0).sqrt();
    Ok(RiceFit {
        nu,
        sigma,
        d_a: sigma / nu,
        status: RiceStatus::Regular,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Adaptive Simpson quadrature.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let c = 0.5 * (a + b);
        let (fa, fb, fc) = (f(a), f(b), f(c));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fb: f64, fc: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let c = 0.5 * (a + b);
            let (d, e) = (0.5 * (a + c), 0.5 * (c + b));
            let (fd, fe) = (f(d), f(e));
            let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
            let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, c, fa, fc, fd, left, tol / 2.0, depth - 1) + rec(f, c, b, fc, fb, fe, right, tol / 2.0, depth - 1)
            }
        }
        rec(f, a, b, fa, fb, fc, whole, tol, depth)
    }

    fn rice_samples(nu: f64, sigma: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, sigma).unwrap();
        (0..n).map(|_| (nu + d.sample(&mut rng)).hypot(d.sample(&mut rng))).collect()
    }

    #[test]
    fn bessel_reference_values() {
        let cases = [
            (0.0, 1.0, 0.0),
            (0.5, 0.64503527044915, 0.15642080318487173),
            (1.0, 0.46575960759364043, 0.2079104153497085),
            (5.0, 0.18354081260932834, 0.16397226694454234),
            (29.9, 0.07326921904600191, 0.0720333749118688),
            (30.1, 0.07302329413106094, 0.07179985435101434),
            (50.0, 0.056561626647454184, 0.055993123892895395),
            (200.0, 0.028227159949111912, 0.028156503394832916),
        ];
        for (x, i0, i1) in cases {
            assert!((bessel_i0e(x) - i0).abs() < 1e-13 * i0.max(1e-300), "i0e({x})");
            assert!((bessel_i1e(x) - i1).abs() <= 1e-13 * i1, "i1e({x})");
        }
    }

    #[test]
    fn rayleigh_reduction() {
        let v = rice_pdf(1.0, 0.0, 1.0).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        assert!(matches!(rice_pdf(-1.0, 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn pdf_integrates_to_one() {
        for nu in [0.5, 1.0, 5.0] {
            for sigma in [0.5, 1.0, 2.0] {
                let hi = nu + 40.0 * sigma;
                let f = |a| rice_pdf(a, nu, sigma).unwrap();
                let panels = 64;
                let w = hi / panels as f64;
                let total: f64 = (0..panels)
                    .map(|i| simpson(&f, i as f64 * w, (i + 1) as f64 * w, 1e-13, 40))
                    .sum();
                assert!((total - 1.0).abs() < 1e-6, "nu {nu} sigma {sigma}: {total}");
            }
        }
    }

    #[test]
    fn high_snr_is_gaussian() {
        let (nu, sigma): (f64, f64) = (20.0, 1.0);
        let mu = (nu * nu + sigma * sigma).sqrt();
        let mut worst: f64 = 0.0;
        for i in -300..=300 {
            let a = mu + i as f64 * 0.01;
            let g = (-(a - mu).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * std::f64::consts::TAU.sqrt());
            worst = worst.max((rice_pdf(a, nu, sigma).unwrap() - g).abs());
        }
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn constant_amplitudes_are_degenerate() {
        let f = fit_rice(&[3.0; 12]).unwrap();
        assert_eq!(f.status, RiceStatus::Degenerate);
        assert_eq!((f.nu, f.sigma, f.d_a), (3.0, 0.0, 0.0));
    }

    #[test]
    fn monte_carlo_rice() {
        let f = fit_rice(&rice_samples(5.0, 1.0, 10_000, 1)).unwrap();
        assert!((f.nu - 5.0).abs() / 5.0 < 0.02, "{f:?}");
        assert!((f.sigma - 1.0).abs() < 0.05, "{f:?}");
        assert_eq!(f.status, RiceStatus::Regular);
    }

    #[test]
    fn monte_carlo_rayleigh() {
        let f = fit_rice(&rice_samples(0.0, 1.0, 10_000, 2)).unwrap();
        assert!(f.nu < 0.1 * f.sigma, "{f:?}");
        assert!(f.stability() < 0.8);
    }

    #[test]
    fn too_few_or_negative() {
        assert!(fit_rice(&[1.0; 7]).is_err());
        let mut v = vec![1.0; 9];
        v[3] = -0.1;
        assert!(matches!(fit_rice(&v), Err(Error::Domain(_))));
    }
}
