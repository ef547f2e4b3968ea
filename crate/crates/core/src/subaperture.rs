//! Doppler sub-aperture decomposition of a single acquisition.
//!
//! The azimuth band is tiled by overlapping windows; each window, applied to
//! the raw spectrum and focused, gives an image of the scene at a different
//! slow-time instant. Stacks are kept in time order: the azimuth Doppler
//! rate is negative, so the earliest epoch belongs to the highest-Doppler
//! band.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::focus::{focus, locate_peak};
use crate::raster::{bandpass_azimuth, dft2, idft2, AcquisitionMeta, BandWindow, ComplexRaster, Taper};
use crate::scalar::Real;

/// Default number of sub-aperture bands.
pub const DEFAULT_BANDS: usize = 16;
/// Default fractional overlap of adjacent bands.
pub const DEFAULT_OVERLAP: f64 = 0.5;
/// Minimum band width, in azimuth frequency bins.
pub const MIN_BAND_BINS: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPlan {
    pub n_bands: usize,
    /// Band width, Hz.
    pub bandwidth: f64,
    pub overlap_fraction: f64,
    /// Band centres, Hz, strictly increasing.
    pub centers: Vec<f64>,
    pub doppler_center: f64,
    pub prf: f64,
    #[serde(default)]
    pub taper: Taper,
    /// Slant range at which `epochs` are evaluated, m.
    pub reference_range: f64,
    /// Slow-time centroid of each band relative to beam-centre crossing, s,
    /// indexed like `centers`.
    pub epochs: Vec<f64>,
}

/// Tile the processed Doppler band `[dc - prf/2, dc + prf/2]` with `n_bands`
/// equal windows overlapping by `overlap_fraction`.
pub fn make_plan(meta: &AcquisitionMeta, shape: (usize, usize), n_bands: usize, overlap_fraction: f64) -> Result<FrequencyPlan> {
    meta.validate()?;
    if n_bands < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 bands, got {n_bands}")));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::InvalidInput(format!("overlap must lie in [0, 1), got {overlap_fraction}")));
    }
    let (n_az, n_rg) = shape;
    let step = 1.0 - overlap_fraction;
    let bandwidth = meta.prf / (1.0 + (n_bands - 1) as f64 * step);
    let bins = bandwidth * n_az as f64 / meta.prf;
    if bins < MIN_BAND_BINS {
        return Err(Error::PlanInfeasible(format!(
            "{n_bands} bands at overlap {overlap_fraction} leave {bins:.2} bins per band (< {MIN_BAND_BINS})"
        )));
    }
    let first = meta.doppler_center - 0.5 * meta.prf + 0.5 * bandwidth;
    let centers: Vec<f64> = (0..n_bands).map(|k| first + k as f64 * bandwidth * step).collect();
    let reference_range = meta.slant_range(n_rg as f64 / 2.0);
    let mut plan = FrequencyPlan {
        n_bands,
        bandwidth,
        overlap_fraction,
        centers,
        doppler_center: meta.doppler_center,
        prf: meta.prf,
        taper: Taper::Rect,
        reference_range,
        epochs: Vec::new(),
    };
    plan.epochs = plan.raw_epochs(meta, reference_range);
    Ok(plan)
}

impl FrequencyPlan {
    fn raw_epochs(&self, meta: &AcquisitionMeta, range: f64) -> Vec<f64> {
        let rate = meta.doppler_rate(range);
        self.centers.iter().map(|c| (c - self.doppler_center) / rate).collect()
    }

    pub fn validate(&self, meta: &AcquisitionMeta) -> Result<()> {
        if self.centers.len() != self.n_bands || self.epochs.len() != self.n_bands {
            return Err(Error::InvalidInput("plan arrays do not match n_bands".into()));
        }
        if (self.prf - meta.prf).abs() > 1e-9 * meta.prf || (self.doppler_center - meta.doppler_center).abs() > 1e-6 {
            return Err(Error::InvalidInput("plan was made for a different acquisition".into()));
        }
        let spacing = self.bandwidth * (1.0 - self.overlap_fraction);
        for w in self.centers.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidInput("band centres must be strictly increasing".into()));
            }
            if ((w[1] - w[0]) - spacing).abs() > 1e-9 {
                return Err(Error::InvalidInput("band centre spacing disagrees with overlap".into()));
            }
        }
        for win in self.windows() {
            crate::raster::check_band(&win, meta)?;
        }
        Ok(())
    }

    pub fn windows(&self) -> Vec<BandWindow> {
        self.centers
            .iter()
            .map(|&center| BandWindow {
                center,
                bandwidth: self.bandwidth,
                taper: self.taper,
            })
            .collect()
    }

    /// Plan indices sorted by increasing epoch.
    pub fn time_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n_bands).collect();
        idx.sort_by(|&a, &b| self.epochs[a].total_cmp(&self.epochs[b]));
        idx
    }

    /// Epochs in time order at the reference range.
    pub fn ordered_epochs(&self) -> Vec<f64> {
        self.time_order().into_iter().map(|i| self.epochs[i]).collect()
    }

    /// Epochs in time order for a target at beam-centre slant range `range`.
    pub fn epochs_at_range(&self, meta: &AcquisitionMeta, range: f64) -> Vec<f64> {
        let raw = self.raw_epochs(meta, range);
        self.time_order().into_iter().map(|i| raw[i]).collect()
    }

    /// Epoch spacing at the reference range, s.
    pub fn epoch_spacing(&self) -> f64 {
        let e = self.ordered_epochs();
        (e[e.len() - 1] - e[0]) / (e.len() - 1) as f64
    }

    /// Highest vibration frequency the epoch sampling can resolve: the
    /// Nyquist frequency `G / (2 T)` of the `G` epochs spanning `T`.
    pub fn observable_bound(&self) -> f64 {
        0.5 / self.epoch_spacing()
    }

    /// Slow-time span of one band's support, s.
    pub fn band_duration(&self, meta: &AcquisitionMeta, range: f64) -> f64 {
        self.bandwidth / meta.doppler_rate(range).abs()
    }
}

/// Time-ordered stack of focused sub-aperture images.
#[derive(Clone, Debug)]
pub struct SubApertureStack<T: Real = f64> {
    pub images: Vec<ComplexRaster<T>>,
    pub plan: FrequencyPlan,
    /// Epoch of each image at the plan's reference range, strictly increasing.
    pub epoch_times: Vec<f64>,
    /// Plan band index of each image.
    pub band_index: Vec<usize>,
}

impl<T: Real> SubApertureStack<T> {
    pub fn new(images: Vec<ComplexRaster<T>>, plan: FrequencyPlan) -> Result<Self> {
        if images.len() != plan.n_bands {
            return Err(Error::InvalidInput(format!(
                "{} images for a {}-band plan",
                images.len(),
                plan.n_bands
            )));
        }
        if images.windows(2).any(|w| w[0].shape() != w[1].shape()) {
            return Err(Error::InvalidInput("sub-aperture images differ in shape".into()));
        }
        let band_index = plan.time_order();
        let epoch_times = plan.ordered_epochs();
        if epoch_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("epoch times must be strictly increasing".into()));
        }
        Ok(Self {
            images,
            plan,
            epoch_times,
            band_index,
        })
    }

    /// Earliest sub-aperture.
    pub fn master(&self) -> &ComplexRaster<T> {
        &self.images[0]
    }

    pub fn slaves(&self) -> &[ComplexRaster<T>] {
        &self.images[1..]
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// Band-limited raw data per plan band (plan order, before focusing).
pub fn band_limited_raw<T: Real>(raw: &ComplexRaster<T>, plan: &FrequencyPlan) -> Result<Vec<ComplexRaster<T>>> {
    plan.validate(&raw.meta)?;
    let spectrum = dft2(raw)?;
    plan.windows()
        .par_iter()
        .map(|win| {
            let mut band = idft2(&bandpass_azimuth(&spectrum, win)?)?;
            band.meta.chirp_bandwidth = raw.meta.chirp_bandwidth;
            band.meta.chirp_duration = raw.meta.chirp_duration;
            Ok(band)
        })
        .collect()
}

/// Split raw data into focused sub-aperture images, in time order.
pub fn decompose<T: Real>(raw: &ComplexRaster<T>, plan: &FrequencyPlan) -> Result<SubApertureStack<T>> {
    let bands = band_limited_raw(raw, plan)?;
    let focused: Vec<ComplexRaster<T>> = bands.par_iter().map(focus).collect::<Result<_>>()?;
    let mut slots: Vec<Option<ComplexRaster<T>>> = focused.into_iter().map(Some).collect();
    let images = plan
        .time_order()
        .into_iter()
        .map(|i| slots[i].take().expect("each band used once"))
        .collect();
    SubApertureStack::new(images, plan.clone())
}

/// Sub-pixel peak position of a point target in every image of the stack.
pub fn track_peak<T: Real>(stack: &SubApertureStack<T>, around: (usize, usize), half: usize, factor: usize) -> Result<Vec<(f64, f64)>> {
    stack
        .images
        .iter()
        .map(|img| locate_peak(img, around, half, factor))
        .collect()
}

/// Full-aperture azimuth smear of a point target, m, estimated from the
/// drift of its sub-aperture peak: the least-squares slope of azimuth
/// position against epoch, scaled by the aperture time `L / v_p`.
///
/// `bands` restricts the fit to a subset of time-ordered images.
pub fn measure_azimuth_drift<T: Real>(
    stack: &SubApertureStack<T>,
    around: (usize, usize),
    bands: std::ops::Range<usize>,
) -> Result<f64> {
    let meta = &stack.images[0].meta;
    let peaks = track_peak(stack, around, 16, 8)?;
    let range = meta.slant_range(peaks[bands.start].1);
    let epochs = stack.plan.epochs_at_range(meta, range);
    let xs: Vec<f64> = epochs[bands.clone()].to_vec();
    let ys: Vec<f64> = peaks[bands].iter().map(|p| p.0 * meta.azimuth_spacing()).collect();
    if xs.len() < 2 {
        return Err(Error::InvalidInput("need at least two bands to measure drift".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx * meta.aperture_length / meta.v_p)
}
