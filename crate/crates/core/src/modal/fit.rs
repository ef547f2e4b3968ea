use serde::{Deserialize, Serialize};

use super::system::ModalSystem;
use crate::coreg::OffsetSeries;
use crate::error::{Error, Result};
use crate::linalg::solve_real;

const MAX_ITERATIONS: usize = 200;
/// Normalised residual above which a fit is not trusted.
pub const REJECT_RESIDUAL: f64 = 0.25;
/// Damping ratio above which a mode is not trusted.
pub const REJECT_DAMPING: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub freq_hz: f64,
    pub omega_n: f64,
    pub damping_ratio: f64,
    /// Modal force-to-response gain of the magnitude model.
    pub gain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalFit {
    pub modes: Vec<Mode>,
    /// Unit-mass diagonal system with the fitted modes.
    pub system: ModalSystem<f64>,
    /// `||model - data|| / ||data||` over the fitted bins.
    pub residual: f64,
    pub iterations: usize,
    /// Normalised residual after each accepted step.
    pub trace: Vec<f64>,
}

impl ModalFit {
    /// Whether the fit passes the residual and damping rejection bounds.
    pub fn confident(&self) -> bool {
        self.residual <= REJECT_RESIDUAL && self.modes.iter().all(|m| m.damping_ratio <= REJECT_DAMPING)
    }
}

/// `|H|` of a sum of single-degree-of-freedom modes at angular frequency `w`.
/// Parameters are `(ln gain, ln omega_n, ln zeta)` per mode.
fn model(p: &[f64], w: f64) -> f64 {
    p.chunks(3)
        .map(|m| {
            let (g, wn, z) = (m[0].exp(), m[1].exp(), m[2].exp());
            let a = wn * wn - w * w;
            let b = 2.0 * z * wn * w;
            g / (a * a + b * b).sqrt()
        })
        .sum()
}

fn residuals(p: &[f64], w: &[f64], y: &[f64]) -> Vec<f64> {
    w.iter().zip(y).map(|(&wi, &yi)| model(p, wi) - yi).collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>()
}

/// Fit `model_order` modes to a magnitude spectrum sampled at `freqs_hz`.
pub fn fit_modal_spectrum(freqs_hz: &[f64], magnitude: &[f64], model_order: usize) -> Result<ModalFit> {
    if freqs_hz.len() != magnitude.len() {
        return Err(Error::InvalidInput("frequency and magnitude lengths differ".into()));
    }
    if model_order == 0 {
        return Err(Error::InvalidInput("model order must be at least 1".into()));
    }
    let needed = 3 * model_order;
    if freqs_hz.len() < needed + 1 {
        return Err(Error::Underdetermined {
            needed: needed + 1,
            got: freqs_hz.len(),
        });
    }
    if magnitude.iter().any(|v| !v.is_finite() || *v < 0.0) || freqs_hz.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::InvalidInput("spectrum must be finite, non-negative, at positive frequencies".into()));
    }
    let w: Vec<f64> = freqs_hz.iter().map(|f| std::f64::consts::TAU * f).collect();
    let y = magnitude;
    let y_norm = norm2(y).sqrt();
    if y_norm == 0.0 {
        return Err(Error::FitFailed {
            reason: "spectrum is identically zero".into(),
            trace: Vec::new(),
        });
    }

    let mut p = initial_guess(&w, y, model_order);
    let mut r = residuals(&p, &w, y);
    let mut cost = norm2(&r);
    let mut lambda = 1e-3;
    let mut trace = vec![cost.sqrt() / y_norm];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        // forward-difference Jacobian in log-parameters
        let np = p.len();
        let mut jac = vec![0.0; w.len() * np];
        for k in 0..np {
            let h = 1e-7 * p[k].abs().max(1.0);
            let mut q = p.clone();
            q[k] += h;
            for (i, &wi) in w.iter().enumerate() {
                jac[i * np + k] = (model(&q, wi) - model(&p, wi)) / h;
            }
        }
        let mut jtj = vec![0.0; np * np];
        let mut jtr = vec![0.0; np];
        for i in 0..w.len() {
            for a in 0..np {
                jtr[a] -= jac[i * np + a] * r[i];
                for b in 0..np {
                    jtj[a * np + b] += jac[i * np + a] * jac[i * np + b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..20 {
            let mut lhs = jtj.clone();
            for a in 0..np {
                lhs[a * np + a] += lambda * jtj[a * np + a].max(1e-12);
            }
            let Some(step) = solve_real(lhs, jtr.clone()) else {
                lambda *= 10.0;
                continue;
            };
            let q: Vec<f64> = p.iter().zip(&step).map(|(a, b)| a + b.clamp(-2.0, 2.0)).collect();
            let rq = residuals(&q, &w, y);
            let cq = norm2(&rq);
            if cq.is_finite() && cq < cost {
                let rel = (cost - cq) / cost.max(f64::MIN_POSITIVE);
                p = q;
                r = rq;
                cost = cq;
                lambda = (lambda / 3.0).max(1e-12);
                trace.push(cost.sqrt() / y_norm);
                improved = true;
                if rel < 1e-12 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved || converged {
            converged = true;
            break;
        }
    }
    if !converged || p.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailed {
            reason: format!("no convergence after {iterations} iterations"),
            trace,
        });
    }

    let mut modes: Vec<Mode> = p
        .chunks(3)
        .map(|m| {
            let omega_n = m[1].exp();
            Mode {
                freq_hz: omega_n / std::f64::consts::TAU,
                omega_n,
                damping_ratio: m[2].exp(),
                gain: m[0].exp(),
            }
        })
        .collect();
    modes.sort_by(|a, b| a.omega_n.total_cmp(&b.omega_n));
    let ones = vec![1.0; modes.len()];
    let c: Vec<f64> = modes.iter().map(|m| 2.0 * m.damping_ratio * m.omega_n).collect();
    let k: Vec<f64> = modes.iter().map(|m| m.omega_n * m.omega_n).collect();
    let system = ModalSystem::diagonal(&ones, &c, &k)?;
    Ok(ModalFit {
        modes,
        system,
        residual: cost.sqrt() / y_norm,
        iterations,
        trace,
    })
}

/// Start each mode at one of the strongest local maxima of the spectrum,
/// with damping from the half-power width where it can be read off.
fn initial_guess(w: &[f64], y: &[f64], order: usize) -> Vec<f64> {
    let n = y.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| (i == 0 || y[i] >= y[i - 1]) && (i + 1 == n || y[i] > y[i + 1]))
        .collect();
    peaks.sort_by(|&a, &b| y[b].total_cmp(&y[a]));
    let mut chosen: Vec<usize> = peaks.into_iter().take(order).collect();
    // fewer maxima than modes: spread the remainder over the band
    let mut extra = 1;
    while chosen.len() < order {
        chosen.push((extra * n / (order + 1)).min(n - 1));
        extra += 1;
    }
    let mut p = Vec::with_capacity(3 * order);
    for &i in &chosen {
        let wn = w[i];
        let half = y[i] / std::f64::consts::SQRT_2;
        let lo = (0..i).rev().find(|&j| y[j] < half).map(|j| w[j]);
        let hi = (i + 1..n).find(|&j| y[j] < half).map(|j| w[j]);
        let zeta = match (lo, hi) {
            (Some(a), Some(b)) => ((b - a) / (2.0 * wn)).clamp(1e-3, 0.5),
            _ => 0.05,
        };
        let gain = y[i].max(f64::MIN_POSITIVE) * 2.0 * zeta * wn * wn;
        p.extend_from_slice(&[gain.ln(), wn.ln(), zeta.ln()]);
    }
    p
}

/// Averaged one-sided magnitude spectrum of the offset series, then a
/// modal fit of it. Assumes a white unit force, so only natural frequencies
/// and damping ratios are meaningful.
pub fn fit_modal_params(series: &[OffsetSeries], model_order: usize) -> Result<ModalFit> {
    let map = super::vibration_map(series)?;
    if map.points.is_empty() {
        return Err(Error::InvalidInput("no point has enough valid epochs".into()));
    }
    if model_order > map.points.len() {
        return Err(Error::InvalidInput(format!(
            "model order {model_order} exceeds the {} available points",
            map.points.len()
        )));
    }
    let n = map.points[0].spectrum.len();
    let bins: Vec<usize> = (1..=n / 2).collect();
    let freqs: Vec<f64> = bins.iter().map(|&k| map.bin_freq(k, n)).collect();
    let mag: Vec<f64> = bins
        .iter()
        .map(|&k| {
            let p: f64 = map
                .points
                .iter()
                .map(|pt| {
                    let s = &pt.spectrum;
                    s[k].norm_sqr() + if 2 * k != n { s[n - k].norm_sqr() } else { 0.0 }
                })
                .sum::<f64>()
                / map.points.len() as f64;
            p.sqrt()
        })
        .collect();
    fit_modal_spectrum(&freqs, &mag, model_order)
}
