//! Sub-pixel coregistration of sub-aperture images and per-point offset
//! tracking.

mod matching;
mod track;
mod warp;

use serde::{Deserialize, Serialize};

pub use matching::{coarse_offset, match_patch, select_points};
pub use track::{track, TrackOutput};
pub use warp::{fit_warp, WarpModel};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DopplerCentroidStrategy {
    #[default]
    Polynomials,
}

/// Which image pairs are correlated along the stack.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// Consecutive sub-apertures; increments are accumulated into positions.
    #[default]
    Adjacent,
    /// Every image against the first one.
    FixedMaster,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoregConfig {
    pub n_points: usize,
    pub corr_threshold: f64,
    pub oversampling: usize,
    /// Patch size (rows, cols), px.
    pub window: [usize; 2],
    /// Keep every k-th candidate in amplitude rank order.
    pub skimming: usize,
    pub use_dem: bool,
    pub doppler_centroid_strategy: DopplerCentroidStrategy,
    /// Integer search radius around the seed offset; `None` means half the window.
    pub search_radius: Option<usize>,
    /// Minimum Chebyshev distance between selected points, px (0 disables).
    pub min_spacing: usize,
    pub warp_degree: usize,
    pub pairing: Pairing,
    /// Block size of the coarse whole-image correlation (0 disables it).
    pub coarse_factor: usize,
}

impl Default for CoregConfig {
    fn default() -> Self {
        Self {
            n_points: 1450,
            corr_threshold: 0.8,
            oversampling: 1200,
            window: [10, 10],
            skimming: 30,
            use_dem: false,
            doppler_centroid_strategy: DopplerCentroidStrategy::Polynomials,
            search_radius: None,
            min_spacing: 0,
            warp_degree: 1,
            pairing: Pairing::Adjacent,
            coarse_factor: 4,
        }
    }
}

impl CoregConfig {
    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        if !(self.corr_threshold > 0.0 && self.corr_threshold <= 1.0) {
            return Err(Error::Config(format!("corr_threshold must lie in (0, 1], got {}", self.corr_threshold)));
        }
        if self.oversampling < 1 {
            return Err(Error::Config("oversampling must be >= 1".into()));
        }
        if self.window[0] < 4 || self.window[1] < 4 {
            return Err(Error::Config(format!("window must be at least 4x4, got {:?}", self.window)));
        }
        if self.skimming < 1 {
            return Err(Error::Config("skimming must be >= 1".into()));
        }
        if self.warp_degree > 3 {
            return Err(Error::Config(format!("warp degree must be <= 3, got {}", self.warp_degree)));
        }
        if self.use_dem {
            return Err(Error::Config("DEM-assisted coregistration is not supported".into()));
        }
        Ok(())
    }

    pub fn radius(&self) -> usize {
        self.search_radius.unwrap_or(self.window[0].max(self.window[1]) / 2)
    }
}

/// Offset of a slave patch relative to its master, px.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetSample {
    pub d_rg: f64,
    pub d_az: f64,
    pub peak_corr: f64,
    /// Angle of the offset vector from the range axis, rad.
    pub theta: f64,
    pub magnitude: f64,
    pub valid: bool,
}

impl OffsetSample {
    pub fn new(d_rg: f64, d_az: f64, peak_corr: f64, valid: bool) -> Self {
        Self {
            d_rg,
            d_az,
            peak_corr,
            theta: d_az.atan2(d_rg),
            magnitude: d_rg.hypot(d_az),
            valid,
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 1.0, true)
    }
}

/// Offsets of one tracked point across the sub-aperture epochs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetSeries {
    pub point_id: usize,
    /// (row, col) in the master image.
    pub pixel: (usize, usize),
    pub samples: Vec<OffsetSample>,
    /// Epoch of each sample, s, strictly increasing.
    pub epochs: Vec<f64>,
    /// Plan band index of each sample.
    pub bands: Vec<usize>,
}

impl OffsetSeries {
    pub fn valid_count(&self) -> usize {
        self.samples.iter().filter(|s| s.valid).count()
    }

    pub fn d_rg(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.d_rg).collect()
    }

    pub fn d_az(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.d_az).collect()
    }
}
