//! Synthetic raw-echo generator for vibrating point scatterers.
//!
//! Straight-line orbit along azimuth, stop-and-go per pulse, rect beam
//! footprint of length `L` centred on the squinted line of sight. Each
//! scatterer returns a linear-FM chirp delayed by `2R/c` with carrier phase
//! `-4 pi R / lambda`, where `R` follows the scatterer's instantaneous
//! position.
//!
//! Image coordinates: a static scatterer at closest-approach range `r` and
//! along-track position `x` focuses on the azimuth line where the platform
//! sees it at beam centre (`x_p = x - r cot(gamma)`) and on the range column
//! of the beam-centre slant range `r / sin(gamma)`.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coreg::{OffsetSample, OffsetSeries};
use crate::error::{Error, Result};
use crate::raster::{AcquisitionMeta, ComplexRaster, SPEED_OF_LIGHT};
use crate::scalar::Real;
use crate::subaperture::FrequencyPlan;

/// Sinusoidal displacement `amp * sin(2 pi freq t + phase)` along `direction`
/// (slant-range, azimuth).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub freq: f64,
    pub amp: f64,
    pub phase: f64,
    pub direction: [f64; 2],
}

impl Harmonic {
    pub fn validate(&self) -> Result<()> {
        if !(self.freq >= 0.0 && self.amp >= 0.0 && self.phase.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid harmonic {self:?}")));
        }
        let norm = self.direction[0].hypot(self.direction[1]);
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "harmonic direction must be a unit vector, norm is {norm}"
            )));
        }
        Ok(())
    }

    fn displacement(&self, t: f64) -> f64 {
        self.amp * (std::f64::consts::TAU * self.freq * t + self.phase).sin()
    }

    fn velocity(&self, t: f64) -> f64 {
        let w = std::f64::consts::TAU * self.freq;
        self.amp * w * (w * t + self.phase).cos()
    }

    /// Mean displacement over `[t - span/2, t + span/2]`.
    fn window_mean(&self, t: f64, span: f64) -> f64 {
        let x = self.freq * span;
        let sinc = if x.abs() < 1e-12 {
            1.0
        } else {
            (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
        };
        self.displacement(t) * sinc
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    /// Closest-approach slant range, m.
    pub pos_rg: f64,
    /// Along-track position, m.
    pub pos_az: f64,
    pub rcs_amp: f64,
    #[serde(default)]
    pub harmonics: Vec<Harmonic>,
    /// Constant drift velocity (slant-range, azimuth), m/s, referenced to t = 0.
    #[serde(default, skip_serializing_if = "is_zero_pair")]
    pub velocity: [f64; 2],
}

fn is_zero_pair(v: &[f64; 2]) -> bool {
    v[0] == 0.0 && v[1] == 0.0
}

impl Scatterer {
    pub fn fixed(pos_rg: f64, pos_az: f64, rcs_amp: f64) -> Self {
        Self {
            pos_rg,
            pos_az,
            rcs_amp,
            harmonics: Vec::new(),
            velocity: [0.0, 0.0],
        }
    }

    /// Displacement (slant-range, azimuth) from the nominal position at time `t`.
    pub fn displacement(&self, t: f64) -> [f64; 2] {
        let mut d = [self.velocity[0] * t, self.velocity[1] * t];
        for h in &self.harmonics {
            let s = h.displacement(t);
            d[0] += s * h.direction[0];
            d[1] += s * h.direction[1];
        }
        d
    }

    pub fn velocity_at(&self, t: f64) -> [f64; 2] {
        let mut v = self.velocity;
        for h in &self.harmonics {
            let s = h.velocity(t);
            v[0] += s * h.direction[0];
            v[1] += s * h.direction[1];
        }
        v
    }

    /// Mean displacement over a slow-time window.
    pub fn window_mean_displacement(&self, t: f64, span: f64) -> [f64; 2] {
        let mut d = [self.velocity[0] * t, self.velocity[1] * t];
        for h in &self.harmonics {
            let s = h.window_mean(t, span);
            d[0] += s * h.direction[0];
            d[1] += s * h.direction[1];
        }
        d
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneDefinition {
    pub meta: AcquisitionMeta,
    pub extent_rg: f64,
    pub extent_az: f64,
    pub chirp_bandwidth: f64,
    pub chirp_duration: f64,
    pub scatterers: Vec<Scatterer>,
    #[serde(default)]
    pub noise_sigma: f64,
}

/// Focused-image pixel (row, col) of a scatterer's nominal position.
pub fn nominal_pixel(meta: &AcquisitionMeta, pos_rg: f64, pos_az: f64) -> (f64, f64) {
    let cot = meta.gamma.cos() / meta.gamma.sin();
    let x_platform = pos_az - pos_rg * cot;
    let row = (x_platform / meta.v_p - meta.t_start) * meta.prf;
    let col = (pos_rg / meta.gamma.sin() - meta.near_range) / meta.range_spacing();
    (row, col)
}

/// Slow time at which the platform sees `(pos_rg, pos_az)` at beam centre.
pub fn beam_centre_time(meta: &AcquisitionMeta, pos_rg: f64, pos_az: f64) -> f64 {
    let cot = meta.gamma.cos() / meta.gamma.sin();
    (pos_az - pos_rg * cot) / meta.v_p
}

/// Apparent offset of a moving target's position in a focused image relative
/// to its nominal pixel, in pixels (range, azimuth), from displacement `d`
/// and velocity `v` at along-track offset `u` from the platform.
fn apparent_shift(meta: &AcquisitionMeta, r: f64, u: f64, d: [f64; 2], v: [f64; 2]) -> [f64; 2] {
    let (s, c) = meta.gamma.sin_cos();
    let sin2 = r * r / (r * r + u * u);
    let doppler = (u * v[1] - r * v[0]) / (meta.v_p * sin2);
    let az = d[1] - d[0] * c / s + doppler;
    [d[0] / s / meta.range_spacing(), az / meta.azimuth_spacing()]
}

impl SceneDefinition {
    pub fn from_json(text: &str) -> Result<Self> {
        let scene: SceneDefinition = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn chirp_rate(&self) -> f64 {
        self.chirp_bandwidth / self.chirp_duration
    }

    /// Meta written alongside simulated raw data (carries the chirp).
    pub fn raw_meta(&self) -> AcquisitionMeta {
        let mut m = self.meta.clone();
        m.chirp_bandwidth = Some(self.chirp_bandwidth);
        m.chirp_duration = Some(self.chirp_duration);
        m
    }

    fn beam_centre_offset(&self, r: f64) -> f64 {
        -r * self.meta.gamma.cos() / self.meta.gamma.sin()
    }

    pub fn validate(&self) -> Result<()> {
        self.meta.validate()?;
        if !(self.extent_rg > 0.0 && self.extent_az > 0.0) {
            return Err(Error::InvalidInput("scene extents must be positive".into()));
        }
        if !(self.chirp_bandwidth > 0.0 && self.chirp_duration > 0.0) {
            return Err(Error::InvalidChirp("chirp bandwidth and duration must be positive".into()));
        }
        if self.chirp_bandwidth > self.meta.fs_rg {
            return Err(Error::InvalidChirp(format!(
                "chirp bandwidth {} Hz exceeds range sampling {} Hz",
                self.chirp_bandwidth, self.meta.fs_rg
            )));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidInput("noise_sigma must be non-negative".into()));
        }
        let half_cell = 0.5 * self.meta.range_spacing();
        for (i, s) in self.scatterers.iter().enumerate() {
            if !(s.rcs_amp >= 0.0) {
                return Err(Error::InvalidInput(format!("scatterer {i}: rcs_amp must be >= 0")));
            }
            for h in &s.harmonics {
                h.validate()?;
            }
            // migration over the aperture must stay within half a range cell
            let uc = self.beam_centre_offset(s.pos_rg);
            let half_l = 0.5 * self.meta.aperture_length;
            let range_at = |u: f64| s.pos_rg.hypot(u);
            let mut lo = range_at(uc - half_l).min(range_at(uc + half_l));
            let hi = range_at(uc - half_l).max(range_at(uc + half_l));
            if (uc - half_l) * (uc + half_l) < 0.0 {
                lo = s.pos_rg;
            }
            if hi - lo > half_cell {
                return Err(Error::InvalidInput(format!(
                    "scatterer {i}: range migration {:.3} m exceeds half a range cell ({half_cell:.3} m)",
                    hi - lo
                )));
            }
        }
        Ok(())
    }

    fn check_bounds(&self, n_az: usize) -> Result<()> {
        let r_lo = self.meta.near_range;
        let r_hi = r_lo + self.extent_rg;
        for (i, s) in self.scatterers.iter().enumerate() {
            for n in 0..n_az {
                let t = self.meta.line_time(n as f64);
                let d = s.displacement(t);
                let (r, x) = (s.pos_rg + d[0], s.pos_az + d[1]);
                if !(r >= r_lo && r <= r_hi && x >= 0.0 && x <= self.extent_az) {
                    return Err(Error::SimulationBounds {
                        index: i,
                        detail: format!(
                            "position (range {r:.3} m, azimuth {x:.3} m) at t = {t:.4} s outside [{r_lo}, {r_hi}] x [0, {}]",
                            self.extent_az
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    /// Raw echo raster of `n_az` pulses by `n_rg` range samples.
    ///
    /// Noise is drawn from a counter-based stream per azimuth line, so the
    /// output is bit-identical for a given seed regardless of thread count.
    pub fn simulate_raw<T: Real>(&self, n_az: usize, n_rg: usize, seed: u64) -> Result<ComplexRaster<T>> {
        self.validate()?;
        if n_az < 2 || n_rg < 2 {
            return Err(Error::InvalidInput(format!("raster must be at least 2x2, got {n_az}x{n_rg}")));
        }
        self.check_bounds(n_az)?;
        let meta = &self.meta;
        let k_r = self.chirp_rate();
        let half_tp = 0.5 * self.chirp_duration;
        let tau0 = 2.0 * meta.near_range / SPEED_OF_LIGHT;
        let half_l = 0.5 * meta.aperture_length;
        let four_pi_over_lambda = 4.0 * std::f64::consts::PI / meta.wavelength;
        let noise = if self.noise_sigma > 0.0 {
            Some(Normal::new(0.0, self.noise_sigma / std::f64::consts::SQRT_2).expect("finite sigma"))
        } else {
            None
        };

        let mut data = vec![Complex::<T>::default(); n_az * n_rg];
        data.par_chunks_mut(n_rg).enumerate().for_each(|(n, line)| {
            let t = meta.line_time(n as f64);
            let x_p = meta.v_p * t;
            let mut acc = vec![Complex::<f64>::default(); n_rg];
            for s in &self.scatterers {
                if s.rcs_amp == 0.0 {
                    continue;
                }
                let d = s.displacement(t);
                let r0 = s.pos_rg + d[0];
                let u = x_p - (s.pos_az + d[1]);
                if (u - self.beam_centre_offset(s.pos_rg)).abs() > half_l {
                    continue;
                }
                let range = r0.hypot(u);
                let tau_d = 2.0 * range / SPEED_OF_LIGHT;
                let carrier = Complex::from_polar(s.rcs_amp, -four_pi_over_lambda * range);
                let j_lo = (((tau_d - half_tp - tau0) * meta.fs_rg).ceil()).max(0.0) as usize;
                let j_hi = (((tau_d + half_tp - tau0) * meta.fs_rg).floor()).min(n_rg as f64 - 1.0);
                if j_hi < 0.0 {
                    continue;
                }
                for j in j_lo..=(j_hi as usize) {
                    let dt = tau0 + j as f64 / meta.fs_rg - tau_d;
                    acc[j] += carrier * Complex::from_polar(1.0, std::f64::consts::PI * k_r * dt * dt);
                }
            }
            if let Some(dist) = noise {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(n as u64);
                for z in acc.iter_mut() {
                    let re = dist.sample(&mut rng);
                    let im = dist.sample(&mut rng);
                    *z += Complex::new(re, im);
                }
            }
            for (o, z) in line.iter_mut().zip(acc) {
                *o = Complex::new(T::lit(z.re), T::lit(z.im));
            }
        });
        ComplexRaster::new(n_az, n_rg, data, self.raw_meta())
    }

    fn band_geometry(&self, s: &Scatterer, plan: &FrequencyPlan) -> (f64, f64, Vec<f64>, f64) {
        let r_c = s.pos_rg / self.meta.gamma.sin();
        let t_bc = beam_centre_time(&self.meta, s.pos_rg, s.pos_az);
        let epochs = plan.epochs_at_range(&self.meta, r_c);
        let span = plan.bandwidth / self.meta.doppler_rate(r_c).abs();
        (r_c, t_bc, epochs, span)
    }

    /// Noiseless displacement offsets per scatterer and sub-aperture band:
    /// the mean displacement over each band's slow-time support, projected
    /// to (range, azimuth) pixels.
    pub fn ground_truth_offsets(&self, plan: &FrequencyPlan) -> Vec<OffsetSeries> {
        self.scatterers
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let (_, t_bc, epochs, span) = self.band_geometry(s, plan);
                let samples = epochs
                    .iter()
                    .map(|&tau| {
                        let d = s.window_mean_displacement(t_bc + tau, span);
                        let px = apparent_shift(&self.meta, s.pos_rg, 0.0, d, [0.0, 0.0]);
                        OffsetSample::new(px[0], px[1], 1.0, true)
                    })
                    .collect();
                self.series(i, s, samples, epochs, plan.time_order())
            })
            .collect()
    }

    /// Offsets a focused sub-aperture image actually exhibits: the window
    /// mean displacement plus the Doppler mislocation caused by the
    /// scatterer's velocity at each band's aperture position.
    pub fn apparent_offsets(&self, plan: &FrequencyPlan) -> Vec<OffsetSeries> {
        const TAPS: usize = 33;
        self.scatterers
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let (_, t_bc, epochs, span) = self.band_geometry(s, plan);
                let uc = self.beam_centre_offset(s.pos_rg);
                let samples = epochs
                    .iter()
                    .map(|&tau| {
                        let mut acc = [0.0; 2];
                        for k in 0..TAPS {
                            let dt = span * ((k as f64 + 0.5) / TAPS as f64 - 0.5);
                            let t = t_bc + tau + dt;
                            let u = uc + self.meta.v_p * (tau + dt);
                            let px = apparent_shift(&self.meta, s.pos_rg, u, s.displacement(t), s.velocity_at(t));
                            acc[0] += px[0];
                            acc[1] += px[1];
                        }
                        OffsetSample::new(acc[0] / TAPS as f64, acc[1] / TAPS as f64, 1.0, true)
                    })
                    .collect();
                self.series(i, s, samples, epochs, plan.time_order())
            })
            .collect()
    }

    fn series(&self, i: usize, s: &Scatterer, samples: Vec<OffsetSample>, epochs: Vec<f64>, bands: Vec<usize>) -> OffsetSeries {
        let (row, col) = nominal_pixel(&self.meta, s.pos_rg, s.pos_az);
        OffsetSeries {
            point_id: i,
            pixel: (row.round().max(0.0) as usize, col.round().max(0.0) as usize),
            samples,
            epochs,
            bands,
        }
    }
}
