use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rice::{fit_rice, RiceFit, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::raster::{AcquisitionMeta, ComplexRaster};
use crate::scalar::Real;

/// Co-registered single-look-complex images of one scene over time.
#[derive(Clone, Debug)]
pub struct SlcStack<T: Real = f64> {
    pub images: Vec<ComplexRaster<T>>,
    /// Acquisition times, days, strictly increasing.
    pub acquisition_times: Vec<f64>,
    pub master_index: usize,
}

impl<T: Real> SlcStack<T> {
    /// Stack with the temporally central image as master unless one is given.
    pub fn new(images: Vec<ComplexRaster<T>>, acquisition_times: Vec<f64>, master_index: Option<usize>) -> Result<Self> {
        if images.is_empty() || images.len() != acquisition_times.len() {
            return Err(Error::InvalidInput(format!(
                "{} images with {} acquisition times",
                images.len(),
                acquisition_times.len()
            )));
        }
        if images.windows(2).any(|w| w[0].shape() != w[1].shape()) {
            return Err(Error::InvalidInput("stack images differ in shape".into()));
        }
        if acquisition_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("acquisition times must be strictly increasing".into()));
        }
        let master_index = master_index.unwrap_or(images.len() / 2);
        if master_index >= images.len() {
            return Err(Error::InvalidInput(format!("master index {master_index} out of range")));
        }
        Ok(Self {
            images,
            acquisition_times,
            master_index,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.images[0].shape()
    }

    /// Amplitude time series of one pixel.
    pub fn amplitudes(&self, row: usize, col: usize) -> Vec<f64> {
        self.images.iter().map(|img| img.get(row, col).norm().as_f64()).collect()
    }
}

/// How a pixel's amplitude dispersion is compared with the threshold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityMode {
    /// Select when `d_a <= threshold`.
    Dispersion,
    /// Select when `1 / (1 + d_a) >= threshold`.
    #[default]
    InverseStability,
}

impl StabilityMode {
    pub fn passes(self, fit: &RiceFit, threshold: f64) -> bool {
        match self {
            StabilityMode::Dispersion => fit.d_a <= threshold,
            StabilityMode::InverseStability => fit.stability() >= threshold,
        }
    }
}

pub const DEFAULT_STABILITY: f64 = 0.8;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PsSet {
    pub pixels: Vec<(usize, usize)>,
    pub fits: Vec<RiceFit>,
}

impl PsSet {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// Persistent scatterer candidates: pixels whose amplitude series is stable.
pub fn select_ps<T: Real>(stack: &SlcStack<T>, threshold: f64, mode: StabilityMode) -> Result<PsSet> {
    if stack.len() < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "{} images, need at least {MIN_SAMPLES}",
            stack.len()
        )));
    }
    if !threshold.is_finite() {
        return Err(Error::InvalidInput("threshold must be finite".into()));
    }
    let (n_az, n_rg) = stack.shape();
    let rows: Vec<Vec<((usize, usize), RiceFit)>> = (0..n_az)
        .into_par_iter()
        .map(|r| {
            (0..n_rg)
                .filter_map(|c| {
                    let fit = fit_rice(&stack.amplitudes(r, c)).ok()?;
                    mode.passes(&fit, threshold).then_some(((r, c), fit))
                })
                .collect()
        })
        .collect();
    let mut set = PsSet::default();
    for (p, f) in rows.into_iter().flatten() {
        set.pixels.push(p);
        set.fits.push(f);
    }
    Ok(set)
}

/// Stack of circular Gaussian clutter of unit `sigma` with stable points of
/// amplitude `snr` planted at `points`, each carrying the phase
/// `phase(point_index, epoch_index)`.
pub fn planted_stack(
    meta: &AcquisitionMeta,
    shape: (usize, usize),
    times_days: &[f64],
    points: &[(usize, usize)],
    snr: f64,
    phase: impl Fn(usize, usize) -> f64 + Sync,
    seed: u64,
) -> Result<SlcStack<f64>> {
    let (n_az, n_rg) = shape;
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let images = times_days
        .par_iter()
        .enumerate()
        .map(|(k, _)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut data: Vec<Complex<f64>> = (0..n_az * n_rg)
                .map(|_| Complex::new(noise.sample(&mut rng), noise.sample(&mut rng)))
                .collect();
            for (i, &(r, c)) in points.iter().enumerate() {
                data[r * n_rg + c] += Complex::from_polar(snr, phase(i, k));
            }
            ComplexRaster::new(n_az, n_rg, data, meta.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    SlcStack::new(images, times_days.to_vec(), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::test_support::meta;

    fn planted() -> (Vec<(usize, usize)>, SlcStack<f64>) {
        let pts: Vec<(usize, usize)> = (0..20).map(|i| (2 + (i * 7) % 28, 3 + (i * 11) % 26)).collect();
        let times: Vec<f64> = (0..30).map(|k| 11.0 * k as f64).collect();
        let stack = planted_stack(&meta(), (32, 32), &times, &pts, 10.0, |_, _| 0.3, 5).unwrap();
        (pts, stack)
    }

    #[test]
    fn planted_points_found() {
        let (pts, stack) = planted();
        let set = select_ps(&stack, DEFAULT_STABILITY, StabilityMode::InverseStability).unwrap();
        let hits = pts.iter().filter(|p| set.pixels.contains(p)).count();
        let recall = hits as f64 / pts.len() as f64;
        let precision = hits as f64 / set.len() as f64;
        assert!(recall >= 0.95 && precision >= 0.9, "recall {recall} precision {precision}");
    }

    #[test]
    fn clutter_rarely_selected() {
        let times: Vec<f64> = (0..30).map(|k| k as f64).collect();
        let stack = planted_stack(&meta(), (40, 40), &times, &[], 0.0, |_, _| 0.0, 6).unwrap();
        let set = select_ps(&stack, DEFAULT_STABILITY, StabilityMode::InverseStability).unwrap();
        assert!((set.len() as f64) < 0.02 * 1600.0, "{}", set.len());
    }

    #[test]
    fn vacuous_threshold_selects_all() {
        let (_, stack) = planted();
        let set = select_ps(&stack, 0.0, StabilityMode::InverseStability).unwrap();
        assert_eq!(set.len(), 32 * 32);
    }

    #[test]
    fn dispersion_mode() {
        let (pts, stack) = planted();
        let set = select_ps(&stack, 0.25, StabilityMode::Dispersion).unwrap();
        assert!(pts.iter().all(|p| set.pixels.contains(p)));
    }

    #[test]
    fn stack_validation() {
        let img = ComplexRaster::<f64>::zeros(4, 4, meta()).unwrap();
        assert!(SlcStack::new(vec![img.clone(), img.clone()], vec![1.0, 1.0], None).is_err());
        assert!(SlcStack::new(vec![img.clone(), img.clone()], vec![1.0, 2.0], Some(2)).is_err());
        let s = SlcStack::new(vec![img.clone(), img.clone(), img], vec![1.0, 2.0, 3.0], None).unwrap();
        assert_eq!(s.master_index, 1);
        assert!(select_ps(&s, 0.8, StabilityMode::InverseStability).is_err());
    }
}
