use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coreg::OffsetSeries;
use crate::error::{Error, Result};

/// Minimum number of valid epochs for a point to enter the map.
pub const MIN_EPOCHS: usize = 4;
/// Minimum number of points for anomaly statistics.
pub const MIN_POINTS: usize = 8;
pub const DEFAULT_Z: f64 = 3.0;
const MAD_TO_SIGMA: f64 = 1.4826;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VibrationPoint {
    pub point_id: usize,
    pub pixel: (usize, usize),
    /// Sum of squared detrended offsets, px^2.
    pub energy: f64,
    /// Frequency of the strongest non-zero bin, Hz; `None` for a still point.
    pub dominant_freq: Option<f64>,
    /// Unitary DFT of the detrended series `d_rg + j d_az`.
    pub spectrum: Vec<Complex<f64>>,
    pub spectrum_rg: Vec<Complex<f64>>,
    pub spectrum_az: Vec<Complex<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VibrationMap {
    pub points: Vec<VibrationPoint>,
    /// Epoch sampling interval, s.
    pub epoch_step: f64,
    /// Points left out for having too few valid epochs.
    pub skipped: usize,
}

impl VibrationMap {
    /// Signed frequency of DFT bin `k`, Hz.
    pub fn bin_freq(&self, k: usize, n: usize) -> f64 {
        bin_freq(k, n, self.epoch_step)
    }

    pub fn nyquist(&self) -> f64 {
        0.5 / self.epoch_step
    }

    pub fn energies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.energy).collect()
    }
}

fn bin_freq(k: usize, n: usize, step: f64) -> f64 {
    let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    k / (n as f64 * step)
}

/// Unitary DFT of a short series (direct sum).
pub fn unitary_dft(x: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let n = x.len();
    let s = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, v)| v * Complex::from_polar(1.0, -std::f64::consts::TAU * ((k * t) % n) as f64 / n as f64))
                .sum::<Complex<f64>>()
                * s
        })
        .collect()
}

/// Remove the least-squares line through `(t, x)`.
pub fn detrend(t: &[f64], x: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let xm = x.iter().sum::<Complex<f64>>() / n;
    let stt: f64 = t.iter().map(|v| (v - tm) * (v - tm)).sum();
    let stx: Complex<f64> = t.iter().zip(x).map(|(a, b)| (b - xm) * (a - tm)).sum();
    let slope = if stt > 0.0 { stx / stt } else { Complex::default() };
    t.iter().zip(x).map(|(a, b)| b - xm - slope * (a - tm)).collect()
}

/// Fill invalid samples by linear interpolation between valid neighbours.
fn fill_invalid(t: &[f64], x: &[Complex<f64>], valid: &[bool]) -> Vec<Complex<f64>> {
    let good: Vec<usize> = (0..x.len()).filter(|&i| valid[i]).collect();
    (0..x.len())
        .map(|i| {
            if valid[i] {
                return x[i];
            }
            let after = good.iter().position(|&g| g > i);
            match after {
                Some(0) => x[good[0]],
                None => x[*good.last().expect("at least one valid sample")],
                Some(p) => {
                    let (a, b) = (good[p - 1], good[p]);
                    let w = (t[i] - t[a]) / (t[b] - t[a]);
                    x[a] * (1.0 - w) + x[b] * w
                }
            }
        })
        .collect()
}

fn analyse(s: &OffsetSeries) -> Option<VibrationPoint> {
    if s.valid_count() < MIN_EPOCHS || s.epochs.len() != s.samples.len() {
        return None;
    }
    let valid: Vec<bool> = s.samples.iter().map(|v| v.valid).collect();
    let z: Vec<Complex<f64>> = s.samples.iter().map(|v| Complex::new(v.d_rg, v.d_az)).collect();
    let z = fill_invalid(&s.epochs, &z, &valid);
    let resid = detrend(&s.epochs, &z);
    let spectrum = unitary_dft(&resid);
    let real_part = |f: fn(&Complex<f64>) -> f64| -> Vec<Complex<f64>> {
        let r: Vec<Complex<f64>> = resid.iter().map(|v| Complex::new(f(v), 0.0)).collect();
        unitary_dft(&r)
    };
    let n = spectrum.len();
    let energy: f64 = spectrum[1..].iter().map(|v| v.norm_sqr()).sum();
    let step = (s.epochs[n - 1] - s.epochs[0]) / (n - 1) as f64;
    let dominant_freq = if energy > 1e-24 {
        let power = |k: usize| spectrum[k].norm_sqr() + if 2 * k != n { spectrum[n - k].norm_sqr() } else { 0.0 };
        let best = (1..=n / 2).fold(1, |b, k| if power(k) > power(b) { k } else { b });
        Some(bin_freq(best, n, step))
    } else {
        None
    };
    Some(VibrationPoint {
        point_id: s.point_id,
        pixel: s.pixel,
        energy,
        dominant_freq,
        spectrum_rg: real_part(|v| v.re),
        spectrum_az: real_part(|v| v.im),
        spectrum,
    })
}

/// Per-point vibration energy and dominant frequency from residual offsets.
/// All series must share one uniformly spaced epoch grid.
pub fn vibration_map(series: &[OffsetSeries]) -> Result<VibrationMap> {
    let Some(first) = series.first() else {
        return Err(Error::InvalidInput("no offset series".into()));
    };
    let epochs = &first.epochs;
    if epochs.len() < MIN_EPOCHS {
        return Err(Error::InvalidInput(format!(
            "{} epochs, need at least {MIN_EPOCHS}",
            epochs.len()
        )));
    }
    let n = epochs.len();
    let step = (epochs[n - 1] - epochs[0]) / (n - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::InvalidInput("epochs must be strictly increasing".into()));
    }
    for s in series {
        if s.epochs.len() != n
            || s.epochs.iter().zip(epochs).any(|(a, b)| (a - b).abs() > 1e-9 * step.max(1.0))
        {
            return Err(Error::InvalidInput(format!("point {} uses a different epoch grid", s.point_id)));
        }
    }
    if epochs.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-6 * step) {
        return Err(Error::InvalidInput("epochs are not uniformly spaced".into()));
    }
    let analysed: Vec<Option<VibrationPoint>> = series.par_iter().map(analyse).collect();
    let skipped = analysed.iter().filter(|p| p.is_none()).count();
    Ok(VibrationMap {
        points: analysed.into_iter().flatten().collect(),
        epoch_step: step,
        skipped,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub point_id: usize,
    pub pixel: (usize, usize),
    pub energy: f64,
    pub z_score: f64,
    pub dominant_freq: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub anomalies: Vec<Anomaly>,
    pub threshold: f64,
    /// Set when the energies have zero spread and no z-score exists.
    pub degenerate: bool,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Robust z-scores `(x - median) / (1.4826 MAD)`; `None` when MAD is zero.
pub fn robust_z_scores(values: &[f64]) -> Option<Vec<f64>> {
    let med = median(&mut values.to_vec());
    let mut dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&mut dev);
    if !(mad > 0.0) {
        return None;
    }
    Some(values.iter().map(|v| (v - med) / (MAD_TO_SIGMA * mad)).collect())
}

/// Points whose energy is an outlier above `z_threshold`, strongest first.
pub fn detect_anomalies(map: &VibrationMap, z_threshold: f64) -> Result<AnomalyReport> {
    if map.points.len() < MIN_POINTS {
        return Err(Error::InvalidInput(format!(
            "{} points, need at least {MIN_POINTS}",
            map.points.len()
        )));
    }
    let Some(z) = robust_z_scores(&map.energies()) else {
        return Ok(AnomalyReport {
            anomalies: Vec::new(),
            threshold: z_threshold,
            degenerate: true,
        });
    };
    let mut anomalies: Vec<Anomaly> = map
        .points
        .iter()
        .zip(z)
        .filter(|(_, z)| *z > z_threshold)
        .map(|(p, z_score)| Anomaly {
            point_id: p.point_id,
            pixel: p.pixel,
            energy: p.energy,
            z_score,
            dominant_freq: p.dominant_freq,
        })
        .collect();
    anomalies.sort_by(|a, b| b.z_score.total_cmp(&a.z_score).then(a.point_id.cmp(&b.point_id)));
    Ok(AnomalyReport {
        anomalies,
        threshold: z_threshold,
        degenerate: false,
    })
}
