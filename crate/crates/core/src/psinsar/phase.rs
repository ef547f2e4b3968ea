use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stack::SlcStack;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Acquisition geometry of one image relative to the master.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairGeometry {
    /// Perpendicular baseline, m.
    pub b_perp: f64,
    /// Incidence angle, rad.
    pub incidence: f64,
    /// Slant range at the reference column, m.
    pub slant_range: f64,
    /// Baseline inclination, rad. Not used by the phase model.
    #[serde(default)]
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGeometry {
    pub wavelength: f64,
    /// Slant-range pixel spacing, m.
    pub range_spacing: f64,
    /// Column where the flat-earth phase vanishes.
    pub reference_col: f64,
    /// One entry per image; the master entry may be omitted.
    pub pairs: Vec<Option<PairGeometry>>,
    /// Terrain height per pixel, row-major, m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heights: Option<Vec<f64>>,
}

/// Decomposition of one interferometric phase sample, rad.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseComponents {
    /// Wrapped phase of `image * conj(master)`.
    pub observed: f64,
    pub flat_earth: f64,
    pub topographic: f64,
    pub atmospheric: f64,
    pub noise: f64,
    pub displacement: f64,
}

impl PhaseComponents {
    pub fn total(&self) -> f64 {
        self.flat_earth + self.topographic + self.atmospheric + self.noise + self.displacement
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsPhase {
    pub pixel: (usize, usize),
    /// One entry per image, in acquisition order.
    pub components: Vec<PhaseComponents>,
    /// Line-of-sight displacement, mm.
    pub displacement_mm: Vec<f64>,
    /// False when a temporal phase step was too close to half a cycle.
    pub reliable: bool,
}

/// Steps within this distance of half a cycle are ambiguous.
pub const UNWRAP_MARGIN: f64 = 0.1 * PI;

pub fn wrap(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(TAU) - PI;
    if w <= -PI { w + TAU } else { w }
}

/// Line-of-sight displacement in mm for an unwrapped phase in rad.
pub fn phase_to_mm(phi: f64, wavelength: f64) -> f64 {
    -wavelength / (4.0 * PI) * phi * 1e3
}

pub fn mm_to_phase(mm: f64, wavelength: f64) -> f64 {
    -4.0 * PI / wavelength * mm * 1e-3
}

impl PhaseGeometry {
    fn pair(&self, k: usize, master: usize) -> Result<PairGeometry> {
        match self.pairs.get(k).copied().flatten() {
            Some(p) => Ok(p),
            None if k == master => Ok(PairGeometry {
                b_perp: 0.0,
                incidence: 0.5,
                slant_range: 1.0,
                alpha: 0.0,
            }),
            None => Err(Error::Config(format!("no geometry for image {k}"))),
        }
    }

    fn validate(&self, n_images: usize, master: usize, n_pixels: usize) -> Result<Vec<PairGeometry>> {
        if !(self.wavelength > 0.0 && self.range_spacing > 0.0) {
            return Err(Error::Config("wavelength and range spacing must be positive".into()));
        }
        if self.pairs.len() != n_images {
            return Err(Error::Config(format!(
                "geometry lists {} pairs for {n_images} images",
                self.pairs.len()
            )));
        }
        if self.heights.as_ref().is_some_and(|h| h.len() != n_pixels) {
            return Err(Error::Config("height raster does not match the stack".into()));
        }
        let pairs = (0..n_images).map(|k| self.pair(k, master)).collect::<Result<Vec<_>>>()?;
        for p in &pairs {
            if !(p.slant_range > 0.0 && p.incidence > 0.0 && p.incidence < 0.5 * PI) {
                return Err(Error::Config(format!("invalid pair geometry {p:?}")));
            }
        }
        Ok(pairs)
    }

    /// Flat-earth phase at column `col`.
    pub fn flat_earth(&self, pair: &PairGeometry, col: f64) -> f64 {
        let d_rho = (col - self.reference_col) * self.range_spacing;
        let rho = pair.slant_range + d_rho;
        -4.0 * PI / self.wavelength * pair.b_perp * d_rho / (rho * pair.incidence.tan())
    }

    /// Topographic phase of height `h` at column `col`.
    pub fn topographic(&self, pair: &PairGeometry, col: f64, h: f64) -> f64 {
        let rho = pair.slant_range + (col - self.reference_col) * self.range_spacing;
        -4.0 * PI / self.wavelength * pair.b_perp * h / (rho * pair.incidence.sin())
    }
}

/// Linear fit through three samples evaluated at `x`.
fn local_linear(t: [f64; 3], y: [f64; 3], x: f64) -> f64 {
    let tm = (t[0] + t[1] + t[2]) / 3.0;
    let ym = (y[0] + y[1] + y[2]) / 3.0;
    let sxx: f64 = t.iter().map(|ti| (ti - tm) * (ti - tm)).sum();
    let sxy: f64 = t.iter().zip(&y).map(|(ti, yi)| (ti - tm) * (yi - ym)).sum();
    ym + sxy / sxx * (x - tm)
}

/// Three-point local-linear smoother; exact on linear series.
pub fn smooth3(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n < 3 {
        return y.to_vec();
    }
    (0..n)
        .map(|k| {
            let c = k.clamp(1, n - 2);
            local_linear([t[c - 1], t[c], t[c + 1]], [y[c - 1], y[c], y[c + 1]], t[k])
        })
        .collect()
}

/// Temporal unwrapping by nearest-cycle steps. Returns the series and
/// whether every step stayed clear of the half-cycle ambiguity.
pub fn unwrap_temporal(wrapped: &[f64]) -> (Vec<f64>, bool) {
    let mut out = Vec::with_capacity(wrapped.len());
    let mut reliable = true;
    for (k, &w) in wrapped.iter().enumerate() {
        if k == 0 {
            out.push(w);
            continue;
        }
        let step = wrap(w - wrapped[k - 1]);
        if step.abs() > PI - UNWRAP_MARGIN {
            reliable = false;
        }
        out.push(out[k - 1] + step);
    }
    (out, reliable)
}

/// Splits the interferometric phase of each persistent scatterer into its
/// modelled components and converts the displacement part to mm.
///
/// `atmo` holds one phase raster per image (row-major), or `None` for zero.
pub fn phase_model<T: Real>(
    stack: &SlcStack<T>,
    ps: &[(usize, usize)],
    geometry: &PhaseGeometry,
    atmo: Option<&[Vec<f64>]>,
) -> Result<Vec<PsPhase>> {
    let (n_az, n_rg) = stack.shape();
    let n = stack.len();
    let m = stack.master_index;
    let pairs = geometry.validate(n, m, n_az * n_rg)?;
    if let Some(a) = atmo {
        if a.len() != n || a.iter().any(|r| r.len() != n_az * n_rg) {
            return Err(Error::Config("atmospheric rasters do not match the stack".into()));
        }
    }
    if let Some(&(r, c)) = ps.iter().find(|&&(r, c)| r >= n_az || c >= n_rg) {
        return Err(Error::OutOfRange(format!("pixel ({r}, {c}) outside {n_az}x{n_rg}")));
    }
    let times = &stack.acquisition_times;
    Ok(ps
        .par_iter()
        .map(|&(r, c)| {
            let idx = r * n_rg + c;
            let master = stack.images[m].get(r, c);
            let h = geometry.heights.as_ref().map_or(0.0, |h| h[idx]);
            let mut comps: Vec<PhaseComponents> = (0..n)
                .map(|k| {
                    let z = stack.images[k].get(r, c) * master.conj();
                    let observed = if k == m { 0.0 } else { z.im.as_f64().atan2(z.re.as_f64()) };
                    PhaseComponents {
                        observed,
                        flat_earth: geometry.flat_earth(&pairs[k], c as f64),
                        topographic: geometry.topographic(&pairs[k], c as f64, h),
                        atmospheric: atmo.map_or(0.0, |a| a[k][idx]),
                        ..Default::default()
                    }
                })
                .collect();
            let residual: Vec<f64> = comps
                .iter()
                .map(|p| wrap(p.observed - p.flat_earth - p.topographic - p.atmospheric))
                .collect();
            let (mut unwrapped, reliable) = unwrap_temporal(&residual);
            let cycles = unwrapped[m] - residual[m];
            unwrapped.iter_mut().for_each(|u| *u -= cycles);
            let smooth = smooth3(times, &unwrapped);
            for (k, p) in comps.iter_mut().enumerate() {
                p.displacement = smooth[k] - smooth[m];
                p.noise = unwrapped[k] - p.displacement;
            }
            let displacement_mm = comps
                .iter()
                .map(|p| phase_to_mm(p.displacement, geometry.wavelength))
                .collect();
            PsPhase {
                pixel: (r, c),
                components: comps,
                displacement_mm,
                reliable,
            }
        })
        .collect())
}
