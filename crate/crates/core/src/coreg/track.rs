use rayon::prelude::*;

use super::matching::match_patch_seeded;
use super::{coarse_offset, fit_warp, select_points, CoregConfig, OffsetSample, OffsetSeries, Pairing, WarpModel};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::subaperture::SubApertureStack;

#[derive(Clone, Debug)]
pub struct TrackOutput {
    pub series: Vec<OffsetSeries>,
    /// Warp fitted for each correlated pair, in pair order.
    pub warps: Vec<WarpModel>,
    /// Points removed because most of their samples were invalid.
    pub dropped: usize,
}

/// Warp with the highest degree the valid samples support.
fn robust_warp(coords: &[(f64, f64)], samples: &[OffsetSample], degree: usize) -> Result<WarpModel> {
    for d in (0..=degree).rev() {
        match fit_warp(coords, samples, d) {
            Ok(w) => return Ok(w),
            Err(Error::Underdetermined { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(WarpModel::zero())
}

/// Track selected points of the first image through the stack. Offsets are
/// warp-corrected per pair and expressed as positions relative to the first
/// epoch, which therefore carries a zero sample.
pub fn track<T: Real>(stack: &SubApertureStack<T>, cfg: &CoregConfig) -> Result<TrackOutput> {
    cfg.validate()?;
    if stack.len() < 2 {
        return Err(Error::InvalidInput("tracking needs at least two images".into()));
    }
    let points = select_points(stack.master(), cfg)?;
    let coords: Vec<(f64, f64)> = points.iter().map(|&(r, c)| (r as f64, c as f64)).collect();
    let n_img = stack.len();

    let pairs: Vec<(usize, usize)> = match cfg.pairing {
        Pairing::Adjacent => (1..n_img).map(|i| (i - 1, i)).collect(),
        Pairing::FixedMaster => (1..n_img).map(|i| (0, i)).collect(),
    };
    let mut residuals: Vec<Vec<OffsetSample>> = Vec::with_capacity(pairs.len());
    let mut warps = Vec::with_capacity(pairs.len());
    for &(a, b) in &pairs {
        let (master, slave) = (&stack.images[a], &stack.images[b]);
        let seed = if cfg.coarse_factor > 0 {
            coarse_offset(master, slave, cfg.coarse_factor)?
        } else {
            (0, 0)
        };
        let measured: Vec<OffsetSample> = points
            .par_iter()
            .map(|&p| match_patch_seeded(master, slave, p, cfg, seed))
            .collect::<Result<_>>()?;
        let warp = robust_warp(&coords, &measured, cfg.warp_degree)?;
        residuals.push(
            measured
                .iter()
                .zip(&coords)
                .map(|(s, &(r, c))| {
                    let (p_rg, p_az) = warp.predict(r, c);
                    OffsetSample::new(s.d_rg - p_rg, s.d_az - p_az, s.peak_corr, s.valid)
                })
                .collect(),
        );
        warps.push(warp);
    }

    let mut series = Vec::with_capacity(points.len());
    let mut dropped = 0;
    for (k, &pixel) in points.iter().enumerate() {
        let mut samples = vec![OffsetSample::zero()];
        let mut invalid = 0;
        let (mut acc_rg, mut acc_az) = (0.0, 0.0);
        for pair in &residuals {
            let s = pair[k];
            if !s.valid {
                invalid += 1;
            }
            let sample = match cfg.pairing {
                Pairing::FixedMaster => s,
                Pairing::Adjacent => {
                    if s.valid {
                        acc_rg += s.d_rg;
                        acc_az += s.d_az;
                    }
                    OffsetSample::new(acc_rg, acc_az, s.peak_corr, s.valid)
                }
            };
            samples.push(sample);
        }
        if 2 * invalid > pairs.len() {
            dropped += 1;
            continue;
        }
        series.push(OffsetSeries {
            point_id: k,
            pixel,
            samples,
            epochs: stack.epoch_times.clone(),
            bands: stack.band_index.clone(),
        });
    }
    Ok(TrackOutput { series, warps, dropped })
}
