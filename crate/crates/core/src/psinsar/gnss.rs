use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnssRecord {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub vel_mm_yr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsVelocity {
    pub id: usize,
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub vel_mm_yr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnssPair {
    pub gnss_index: usize,
    pub ps_id: usize,
    pub distance_m: f64,
    pub vel_gnss: f64,
    pub vel_ps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub pairs: Vec<GnssPair>,
    /// GNSS records with no free scatterer within the search distance.
    pub skipped: usize,
    /// Pearson coefficient of paired velocities, if defined.
    pub correlation: Option<f64>,
}

/// Great-circle distance on a spherical earth, m.
pub fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (0.5 * dp).sin().powi(2) + p1.cos() * p2.cos() * (0.5 * dl).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Pearson correlation; `None` for fewer than two samples or zero spread.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pairs each GNSS record, in order, with the nearest scatterer not yet
/// taken that lies within `max_dist` metres.
pub fn compare_gnss(ps: &[PsVelocity], gnss: &[GnssRecord], max_dist: f64) -> Result<ComparisonReport> {
    if !(max_dist > 0.0) {
        return Err(Error::InvalidInput(format!("max_dist must be positive, got {max_dist}")));
    }
    let mut taken = vec![false; ps.len()];
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for (gi, g) in gnss.iter().enumerate() {
        let best = ps
            .iter()
            .enumerate()
            .filter(|(i, _)| !taken[*i])
            .map(|(i, p)| (i, haversine(g.lat_deg, g.lon_deg, p.lat_deg, p.lon_deg)))
            .filter(|(_, d)| *d <= max_dist)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, d)) => {
                taken[i] = true;
                pairs.push(GnssPair {
                    gnss_index: gi,
                    ps_id: ps[i].id,
                    distance_m: d,
                    vel_gnss: g.vel_mm_yr,
                    vel_ps: ps[i].vel_mm_yr,
                });
            }
            None => skipped += 1,
        }
    }
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.iter().map(|p| (p.vel_gnss, p.vel_ps)).unzip();
    Ok(ComparisonReport {
        correlation: pearson(&a, &b),
        pairs,
        skipped,
    })
}
