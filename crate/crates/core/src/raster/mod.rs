//! Complex raster container and the spectral primitives shared by every
//! processing stage.
//!
//! Azimuth runs along rows, range along columns. Transforms are unitary
//! (`1/sqrt(N)` per axis) so energy is preserved exactly.

mod fft;
pub mod io;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use fft::{dft2, fft_axis, idft2, Axis, Direction};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Acquisition geometry and sampling carried alongside every raster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionMeta {
    /// Pulse repetition frequency (azimuth sampling), Hz.
    pub prf: f64,
    /// Range sampling frequency, Hz.
    pub fs_rg: f64,
    /// Carrier wavelength, m.
    pub wavelength: f64,
    /// Platform velocity, m/s.
    pub v_p: f64,
    /// Synthetic aperture length, m.
    #[serde(rename = "L")]
    pub aperture_length: f64,
    /// Incidence angle, rad.
    pub incidence: f64,
    /// Angle between the platform velocity and the beam-centre line of sight, rad.
    pub gamma: f64,
    /// Slow time of the first azimuth line, s.
    pub t_start: f64,
    /// Doppler centroid of the data, Hz.
    pub doppler_center: f64,
    /// Slant range of the first range column, m.
    pub near_range: f64,
    /// Transmitted chirp bandwidth, Hz (raw data only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chirp_bandwidth: Option<f64>,
    /// Transmitted chirp duration, s (raw data only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chirp_duration: Option<f64>,
}

impl AcquisitionMeta {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("prf", self.prf),
            ("fs_rg", self.fs_rg),
            ("wavelength", self.wavelength),
            ("v_p", self.v_p),
            ("L", self.aperture_length),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidMeta(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.incidence > 0.0 && self.incidence < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidMeta(format!(
                "incidence must lie in (0, pi/2), got {}",
                self.incidence
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= std::f64::consts::FRAC_PI_2 + 1e-12) {
            return Err(Error::InvalidMeta(format!(
                "gamma must lie in (0, pi/2], got {}",
                self.gamma
            )));
        }
        if !(self.near_range.is_finite() && self.near_range >= 0.0) {
            return Err(Error::InvalidMeta(format!(
                "near_range must be non-negative, got {}",
                self.near_range
            )));
        }
        if !(self.t_start.is_finite() && self.doppler_center.is_finite()) {
            return Err(Error::InvalidMeta("t_start and doppler_center must be finite".into()));
        }
        Ok(())
    }

    /// Range sample spacing in slant range, m.
    pub fn range_spacing(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.fs_rg)
    }

    /// Along-track platform advance between azimuth lines, m.
    pub fn azimuth_spacing(&self) -> f64 {
        self.v_p / self.prf
    }

    /// Slant range (beam centre) of range column `col`, m.
    pub fn slant_range(&self, col: f64) -> f64 {
        self.near_range + col * self.range_spacing()
    }

    /// Slow time of azimuth line `row`, s.
    pub fn line_time(&self, row: f64) -> f64 {
        self.t_start + row / self.prf
    }

    /// Azimuth Doppler rate at beam-centre slant range `range`, Hz/s (negative).
    pub fn doppler_rate(&self, range: f64) -> f64 {
        let s = self.gamma.sin();
        -2.0 * self.v_p * self.v_p * s * s / (self.wavelength * range)
    }

    /// Doppler bandwidth of a point target illuminated over the full aperture.
    pub fn aperture_doppler_bandwidth(&self, range: f64) -> f64 {
        self.doppler_rate(range).abs() * self.aperture_length / self.v_p
    }
}

/// Spectral window along azimuth frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandWindow {
    pub center: f64,
    pub bandwidth: f64,
    #[serde(default)]
    pub taper: Taper,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    #[default]
    Rect,
    Hann,
}

/// Two-dimensional complex image: raw echoes, a focused SLC, a spectrum or a
/// sub-aperture image.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexRaster<T: Real = f64> {
    n_az: usize,
    n_rg: usize,
    data: Vec<Complex<T>>,
    pub meta: AcquisitionMeta,
}

impl<T: Real> ComplexRaster<T> {
    pub fn new(n_az: usize, n_rg: usize, data: Vec<Complex<T>>, meta: AcquisitionMeta) -> Result<Self> {
        if n_az < 2 || n_rg < 2 {
            return Err(Error::InvalidInput(format!(
                "raster must be at least 2x2, got {n_az}x{n_rg}"
            )));
        }
        if data.len() != n_az * n_rg {
            return Err(Error::InvalidInput(format!(
                "data length {} does not match {n_az}x{n_rg}",
                data.len()
            )));
        }
        Ok(Self { n_az, n_rg, data, meta })
    }

    pub fn zeros(n_az: usize, n_rg: usize, meta: AcquisitionMeta) -> Result<Self> {
        Self::new(n_az, n_rg, vec![Complex::default(); n_az * n_rg], meta)
    }

    pub fn from_fn(
        n_az: usize,
        n_rg: usize,
        meta: AcquisitionMeta,
        mut f: impl FnMut(usize, usize) -> Complex<T>,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(n_az * n_rg);
        for r in 0..n_az {
            for c in 0..n_rg {
                data.push(f(r, c));
            }
        }
        Self::new(n_az, n_rg, data, meta)
    }

    #[inline]
    pub fn n_az(&self) -> usize {
        self.n_az
    }

    #[inline]
    pub fn n_rg(&self) -> usize {
        self.n_rg
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.n_az, self.n_rg)
    }

    #[inline]
    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex<T>> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.data[row * self.n_rg + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: Complex<T>) {
        self.data[row * self.n_rg + col] = v;
    }

    pub fn row(&self, row: usize) -> &[Complex<T>] {
        &self.data[row * self.n_rg..(row + 1) * self.n_rg]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [Complex<T>] {
        &mut self.data[row * self.n_rg..(row + 1) * self.n_rg]
    }

    /// Sum of squared magnitudes.
    pub fn energy(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Magnitude image, row-major.
    pub fn amplitude(&self) -> Vec<T> {
        self.data.iter().map(|z| z.norm()).collect()
    }

    /// Location of the largest magnitude sample (first in row-major order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        let mut best_v = T::neg_infinity();
        for (i, z) in self.data.iter().enumerate() {
            let v = z.norm_sqr();
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        (best / self.n_rg, best % self.n_rg)
    }

    /// Same samples and meta with another sample type.
    pub fn cast<U: Real>(&self) -> ComplexRaster<U> {
        ComplexRaster {
            n_az: self.n_az,
            n_rg: self.n_rg,
            data: self
                .data
                .iter()
                .map(|z| Complex::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64())))
                .collect(),
            meta: self.meta.clone(),
        }
    }

    /// Element-wise `a*self + b*other` for rasters of the same shape.
    pub fn combine(&self, a: Complex<T>, other: &Self, b: Complex<T>) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::InvalidInput("raster shapes differ".into()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self {
            n_az: self.n_az,
            n_rg: self.n_rg,
            data,
            meta: self.meta.clone(),
        })
    }
}

/// Signed azimuth-frequency offset of spectrum row `k` from `center`, in bins,
/// wrapped to `[-n/2, n/2)`.
fn wrapped_bin_offset(k: usize, n: usize, center_bins: f64) -> f64 {
    let n_f = n as f64;
    let mut d = (k as f64 - center_bins) % n_f;
    if d < -n_f / 2.0 {
        d += n_f;
    } else if d >= n_f / 2.0 {
        d -= n_f;
    }
    d
}

const BIN_EPS: f64 = 1e-9;

/// Weight applied by `win` to every azimuth-frequency row of an `n_az`-row
/// spectrum sampled at `prf`. Rect supports are half-open so that adjacent
/// windows partition the band.
pub fn band_weights(win: &BandWindow, n_az: usize, prf: f64) -> Vec<f64> {
    let center_bins = win.center * n_az as f64 / prf;
    let half = 0.5 * win.bandwidth * n_az as f64 / prf;
    (0..n_az)
        .map(|k| {
            let d = wrapped_bin_offset(k, n_az, center_bins);
            if d >= -half - BIN_EPS && d < half - BIN_EPS {
                match win.taper {
                    Taper::Rect => 1.0,
                    Taper::Hann => 0.5 * (1.0 + (std::f64::consts::PI * d / half).cos()),
                }
            } else {
                0.0
            }
        })
        .collect()
}

/// Check that `win` lies inside the azimuth Nyquist band of `meta`.
pub fn check_band(win: &BandWindow, meta: &AcquisitionMeta) -> Result<()> {
    if !(win.bandwidth.is_finite() && win.bandwidth > 0.0) {
        return Err(Error::InvalidBand(format!(
            "bandwidth must be positive, got {}",
            win.bandwidth
        )));
    }
    let reach = (win.center - meta.doppler_center).abs() + win.bandwidth / 2.0;
    if reach > meta.prf / 2.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidBand(format!(
            "window centre {} Hz, bandwidth {} Hz exceeds the Nyquist band {} +/- {} Hz",
            win.center,
            win.bandwidth,
            meta.doppler_center,
            meta.prf / 2.0
        )));
    }
    Ok(())
}

/// Zero azimuth-frequency rows of `spec` outside `win` and taper the rest.
///
/// The range axis is untouched. The output Doppler centroid becomes the
/// window centre.
pub fn bandpass_azimuth<T: Real>(spec: &ComplexRaster<T>, win: &BandWindow) -> Result<ComplexRaster<T>> {
    check_band(win, &spec.meta)?;
    let weights = band_weights(win, spec.n_az, spec.meta.prf);
    let mut out = spec.clone();
    for (k, &w) in weights.iter().enumerate() {
        if w == 1.0 {
            continue;
        }
        let w = T::lit(w);
        for z in out.row_mut(k) {
            *z = if w == T::zero() { Complex::default() } else { *z * w };
        }
    }
    out.meta.doppler_center = win.center;
    Ok(out)
}

/// Band-limited interpolation of a `(2*half_size+1)`-square patch by zero
/// padding its spectrum. Output sample `(u, v)` sits at patch coordinate
/// `(u/factor, v/factor)` relative to the patch corner.
pub fn oversample_patch<T: Real>(
    img: &ComplexRaster<T>,
    center: (usize, usize),
    half_size: usize,
    factor: usize,
) -> Result<ComplexRaster<T>> {
    if factor == 0 {
        return Err(Error::InvalidInput("oversampling factor must be >= 1".into()));
    }
    let (r0, c0) = center;
    if r0 < half_size
        || c0 < half_size
        || r0 + half_size >= img.n_az
        || c0 + half_size >= img.n_rg
    {
        return Err(Error::OutOfRange(format!(
            "patch of half size {half_size} at ({r0}, {c0}) leaves the {}x{} image",
            img.n_az, img.n_rg
        )));
    }
    let n = 2 * half_size + 1;
    let patch = ComplexRaster::from_fn(n, n, img.meta.clone(), |r, c| {
        img.get(r0 - half_size + r, c0 - half_size + c)
    })?;
    if factor == 1 {
        return Ok(patch);
    }
    let spec = dft2(&patch)?;
    let m = n * factor;
    let mut padded = ComplexRaster::zeros(m, m, img.meta.clone())?;
    // n is odd: frequencies 0..=h are non-negative, n-h..n negative
    let map = |k: usize| if k <= half_size { k } else { m - (n - k) };
    for r in 0..n {
        for c in 0..n {
            padded.set(map(r), map(c), spec.get(r, c));
        }
    }
    let mut out = idft2(&padded)?;
    let gain = T::lit(factor as f64);
    for z in out.data_mut() {
        *z = *z * gain;
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn meta() -> AcquisitionMeta {
        AcquisitionMeta {
            prf: 100.0,
            fs_rg: 50e6,
            wavelength: 0.03,
            v_p: 50.0,
            aperture_length: 100.0,
            incidence: 0.6,
            gamma: std::f64::consts::FRAC_PI_2,
            t_start: 0.0,
            doppler_center: 0.0,
            near_range: 5000.0,
            chirp_bandwidth: None,
            chirp_duration: None,
        }
    }

    pub fn random_raster(n_az: usize, n_rg: usize, seed: u64) -> ComplexRaster<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        ComplexRaster::from_fn(n_az, n_rg, meta(), |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::{meta, random_raster};
    use super::*;
    use std::f64::consts::PI;

    fn direct_dft2(x: &ComplexRaster<f64>, sign: f64) -> Vec<Complex<f64>> {
        let (n, m) = x.shape();
        let norm = 1.0 / ((n * m) as f64).sqrt();
        let mut out = vec![Complex::default(); n * m];
        for k in 0..n {
            for l in 0..m {
                let mut acc = Complex::default();
                for r in 0..n {
                    for c in 0..m {
                        let ph = sign * 2.0 * PI * ((k * r) as f64 / n as f64 + (l * c) as f64 / m as f64);
                        acc += x.get(r, c) * Complex::from_polar(1.0, ph);
                    }
                }
                out[k * m + l] = acc * norm;
            }
        }
        out
    }

    #[test]
    fn zero_raster_has_zero_spectrum() {
        let x = ComplexRaster::<f64>::zeros(4, 4, meta()).unwrap();
        let s = dft2(&x).unwrap();
        assert!(s.data().iter().all(|z| *z == Complex::default()));
    }

    #[test]
    fn impulse_is_flat() {
        let mut x = ComplexRaster::<f64>::zeros(8, 8, meta()).unwrap();
        x.set(0, 0, Complex::new(1.0, 0.0));
        let s = dft2(&x).unwrap();
        for z in s.data() {
            assert!((z - Complex::new(0.125, 0.0)).norm() < 1e-15);
        }
        let back = idft2(&s).unwrap();
        assert!((back.get(0, 0) - Complex::new(1.0, 0.0)).norm() < 1e-14);
        let rest: f64 = back.data()[1..].iter().map(|z| z.norm()).sum();
        assert!(rest < 1e-13);
    }

    #[test]
    fn matches_direct_dft_and_inverts() {
        let x = random_raster(16, 16, 1);
        let s = dft2(&x).unwrap();
        let oracle = direct_dft2(&x, -1.0);
        let err = s
            .data()
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "fft vs direct dft: {err}");
        let back = idft2(&s).unwrap();
        let err = back
            .data()
            .iter()
            .zip(x.data())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "round trip: {err}");
        let e_img: f64 = x.data().iter().map(|z| z.norm_sqr()).sum();
        let e_spec: f64 = oracle.iter().map(|z| z.norm_sqr()).sum();
        assert!((s.energy() - e_img).abs() / e_img < 1e-10);
        assert!((e_spec - e_img).abs() / e_img < 1e-10);
    }

    #[test]
    fn non_power_of_two_sizes() {
        let x = random_raster(12, 7, 2);
        let s = dft2(&x).unwrap();
        let oracle = direct_dft2(&x, -1.0);
        let err = s
            .data()
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn f32_round_trip() {
        let x = random_raster(16, 12, 3).cast::<f32>();
        let back = idft2(&dft2(&x).unwrap()).unwrap();
        let err = back
            .data()
            .iter()
            .zip(x.data())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f32, f32::max);
        assert!(err < 1e-5);
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(ComplexRaster::<f64>::zeros(1, 8, meta()).is_err());
        assert!(ComplexRaster::<f64>::new(2, 2, vec![Complex::default(); 3], meta()).is_err());
    }

    #[test]
    fn full_band_rect_is_identity() {
        let x = random_raster(32, 8, 4);
        let s = dft2(&x).unwrap();
        let win = BandWindow { center: 0.0, bandwidth: 100.0, taper: Taper::Rect };
        let y = bandpass_azimuth(&s, &win).unwrap();
        assert_eq!(y.data(), s.data());
    }

    #[test]
    fn half_bands_partition_energy() {
        let x = random_raster(64, 8, 5);
        let s = dft2(&x).unwrap();
        let lo = BandWindow { center: -25.0, bandwidth: 50.0, taper: Taper::Rect };
        let hi = BandWindow { center: 25.0, bandwidth: 50.0, taper: Taper::Rect };
        let e = bandpass_azimuth(&s, &lo).unwrap().energy() + bandpass_azimuth(&s, &hi).unwrap().energy();
        assert!((e - s.energy()).abs() / s.energy() < 1e-10);
    }

    #[test]
    fn odd_length_partition() {
        let x = random_raster(45, 4, 6);
        let s = dft2(&x).unwrap();
        let bands = [(-100.0 / 3.0), 0.0, 100.0 / 3.0];
        let e: f64 = bands
            .iter()
            .map(|&c| {
                let w = BandWindow { center: c, bandwidth: 100.0 / 3.0, taper: Taper::Rect };
                bandpass_azimuth(&s, &w).unwrap().energy()
            })
            .sum();
        assert!((e - s.energy()).abs() / s.energy() < 1e-10);
    }

    #[test]
    fn out_of_band_tone_is_rejected() {
        // 0.3 prf falls on bin 18 of 60
        let n = 60;
        let x = ComplexRaster::from_fn(n, 4, meta(), |r, _| {
            Complex::from_polar(1.0, 2.0 * PI * 0.3 * r as f64)
        })
        .unwrap();
        let s = dft2(&x).unwrap();
        let win = BandWindow { center: -30.0, bandwidth: 10.0, taper: Taper::Rect };
        let y = bandpass_azimuth(&s, &win).unwrap();
        assert!(y.energy() < 1e-20 * s.energy());
    }

    #[test]
    fn window_beyond_nyquist_is_an_error() {
        let s = random_raster(16, 4, 7);
        let win = BandWindow { center: 40.0, bandwidth: 30.0, taper: Taper::Rect };
        assert!(matches!(bandpass_azimuth(&s, &win), Err(Error::InvalidBand(_))));
    }

    #[test]
    fn bandpass_updates_doppler_center() {
        let s = random_raster(16, 4, 8);
        let win = BandWindow { center: 10.0, bandwidth: 20.0, taper: Taper::Hann };
        let y = bandpass_azimuth(&s, &win).unwrap();
        assert_eq!(y.meta.doppler_center, 10.0);
    }

    #[test]
    fn rect_bandpass_is_idempotent() {
        let s = random_raster(40, 6, 9);
        let win = BandWindow { center: 12.5, bandwidth: 35.0, taper: Taper::Rect };
        let once = bandpass_azimuth(&s, &win).unwrap();
        let twice = bandpass_azimuth(&once, &win).unwrap();
        assert_eq!(once.data(), twice.data());
    }

    #[test]
    fn oversample_identity_and_dc() {
        let x = random_raster(20, 20, 10);
        let p = oversample_patch(&x, (10, 10), 3, 1).unwrap();
        assert_eq!(p.shape(), (7, 7));
        assert_eq!(p.get(0, 0), x.get(7, 7));
        assert_eq!(p.get(6, 6), x.get(13, 13));

        let c = Complex::new(0.7, -0.2);
        let flat = ComplexRaster::from_fn(16, 16, meta(), |_, _| c).unwrap();
        let up = oversample_patch(&flat, (8, 8), 4, 4).unwrap();
        assert_eq!(up.shape(), (36, 36));
        for z in up.data() {
            assert!((z - c).norm() < 1e-12);
        }
    }

    #[test]
    fn oversampled_sinusoid_matches_analytic() {
        let h = 5;
        let n = 2 * h + 1;
        let (fr, fc) = (2.0 / n as f64, -3.0 / n as f64);
        let x = ComplexRaster::from_fn(32, 32, meta(), |r, c| {
            Complex::from_polar(1.0, 2.0 * PI * (fr * r as f64 + fc * c as f64))
        })
        .unwrap();
        let (r0, c0) = (12, 14);
        let factor = 8;
        let up = oversample_patch(&x, (r0, c0), h, factor).unwrap();
        for u in factor..(n - 1) * factor {
            for v in factor..(n - 1) * factor {
                let r = (r0 - h) as f64 + u as f64 / factor as f64;
                let c = (c0 - h) as f64 + v as f64 / factor as f64;
                let want = Complex::from_polar(1.0, 2.0 * PI * (fr * r + fc * c));
                assert!((up.get(u, v) - want).norm() < 1e-6, "({u}, {v})");
            }
        }
    }

    #[test]
    fn oversample_out_of_bounds() {
        let x = random_raster(10, 10, 11);
        assert!(matches!(oversample_patch(&x, (2, 5), 3, 2), Err(Error::OutOfRange(_))));
        assert!(matches!(oversample_patch(&x, (5, 7), 3, 2), Err(Error::OutOfRange(_))));
    }
}
