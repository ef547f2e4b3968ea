use serde::{Deserialize, Serialize};

use super::OffsetSample;
use crate::error::{Error, Result};
use crate::linalg::least_squares;

const MAX_REJECTION_ROUNDS: usize = 3;

/// Polynomial offset field over the image, in normalised coordinates
/// `((row - row0) / scale, (col - col0) / scale)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarpModel {
    pub degree: usize,
    pub origin: (f64, f64),
    pub scale: f64,
    /// Coefficients of `d_rg`, ordered as [`WarpModel::terms`].
    pub coef_rg: Vec<f64>,
    pub coef_az: Vec<f64>,
    /// RMS of the offset residual magnitude over retained samples, px.
    pub residual_rms: f64,
    /// Indices of samples rejected as outliers.
    pub rejected: Vec<usize>,
}

impl WarpModel {
    pub fn zero() -> Self {
        Self {
            degree: 0,
            origin: (0.0, 0.0),
            scale: 1.0,
            coef_rg: vec![0.0],
            coef_az: vec![0.0],
            residual_rms: 0.0,
            rejected: Vec::new(),
        }
    }

    /// Exponents `(i, j)` of `y^i x^j` in coefficient order.
    pub fn terms(degree: usize) -> Vec<(usize, usize)> {
        (0..=degree)
            .flat_map(|total| (0..=total).rev().map(move |i| (i, total - i)))
            .collect()
    }

    pub fn n_terms(degree: usize) -> usize {
        (degree + 1) * (degree + 2) / 2
    }

    fn basis(&self, row: f64, col: f64) -> Vec<f64> {
        basis(self.degree, (row - self.origin.0) / self.scale, (col - self.origin.1) / self.scale)
    }

    /// Predicted `(d_rg, d_az)` at `(row, col)`.
    pub fn predict(&self, row: f64, col: f64) -> (f64, f64) {
        let b = self.basis(row, col);
        let dot = |c: &[f64]| b.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
        (dot(&self.coef_rg), dot(&self.coef_az))
    }
}

fn basis(degree: usize, y: f64, x: f64) -> Vec<f64> {
    WarpModel::terms(degree)
        .into_iter()
        .map(|(i, j)| y.powi(i as i32) * x.powi(j as i32))
        .collect()
}

/// Least-squares polynomial warp through the valid samples located at
/// `coords` (row, col), with up to three rounds of 3-sigma outlier rejection.
pub fn fit_warp(coords: &[(f64, f64)], samples: &[OffsetSample], degree: usize) -> Result<WarpModel> {
    if degree > 3 {
        return Err(Error::InvalidInput(format!("warp degree must be <= 3, got {degree}")));
    }
    if coords.len() != samples.len() {
        return Err(Error::InvalidInput("coords and samples differ in length".into()));
    }
    let needed = WarpModel::n_terms(degree);
    let mut active: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].valid).collect();
    if active.len() < needed {
        return Err(Error::Underdetermined {
            needed,
            got: active.len(),
        });
    }
    let n = active.len() as f64;
    let origin = (
        active.iter().map(|&i| coords[i].0).sum::<f64>() / n,
        active.iter().map(|&i| coords[i].1).sum::<f64>() / n,
    );
    let scale = active
        .iter()
        .map(|&i| (coords[i].0 - origin.0).abs().max((coords[i].1 - origin.1).abs()))
        .fold(0.0f64, f64::max)
        .max(1.0);
    let mut model = WarpModel {
        degree,
        origin,
        scale,
        coef_rg: vec![0.0; needed],
        coef_az: vec![0.0; needed],
        residual_rms: 0.0,
        rejected: Vec::new(),
    };
    for round in 0..=MAX_REJECTION_ROUNDS {
        let rows: Vec<Vec<f64>> = active.iter().map(|&i| model.basis(coords[i].0, coords[i].1)).collect();
        let y_rg: Vec<f64> = active.iter().map(|&i| samples[i].d_rg).collect();
        let y_az: Vec<f64> = active.iter().map(|&i| samples[i].d_az).collect();
        let degenerate = || Error::Underdetermined {
            needed,
            got: active.len(),
        };
        model.coef_rg = least_squares(&rows, &y_rg).ok_or_else(degenerate)?;
        model.coef_az = least_squares(&rows, &y_az).ok_or_else(degenerate)?;
        let resid: Vec<f64> = active
            .iter()
            .map(|&i| {
                let (p_rg, p_az) = model.predict(coords[i].0, coords[i].1);
                (samples[i].d_rg - p_rg).hypot(samples[i].d_az - p_az)
            })
            .collect();
        model.residual_rms = (resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64).sqrt();
        if round == MAX_REJECTION_ROUNDS {
            break;
        }
        let bound = 3.0 * model.residual_rms;
        let keep: Vec<usize> = active
            .iter()
            .zip(&resid)
            .filter(|(_, &r)| r <= bound)
            .map(|(&i, _)| i)
            .collect();
        if keep.len() == active.len() || keep.len() < needed {
            break;
        }
        model.rejected.extend(active.iter().filter(|i| !keep.contains(i)));
        active = keep;
    }
    model.rejected.sort_unstable();
    Ok(model)
}
