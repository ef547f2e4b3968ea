use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::least_squares;

pub const MIN_KINEMATIC_EPOCHS: usize = 4;
pub const DAYS_PER_YEAR: f64 = 365.25;

/// Displacement and its first three time derivatives for one scatterer.
///
/// Each derived series is sampled at the midpoints of its parent's epochs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    /// Epochs, yr.
    pub times: Vec<f64>,
    /// mm
    pub displacement: Vec<f64>,
    /// mm/yr
    pub velocity: Vec<f64>,
    /// mm/yr^2
    pub acceleration: Vec<f64>,
    /// mm/yr^3
    pub jerk: Vec<f64>,
    /// Least-squares linear rate, mm/yr.
    pub mean_velocity: f64,
    /// Twice the least-squares quadratic coefficient, mm/yr^2.
    pub mean_acceleration: f64,
}

/// One finite-difference pass: divided differences placed at midpoints.
pub fn difference(t: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(t, y)| (0.5 * (t[0] + t[1]), (y[1] - y[0]) / (t[1] - t[0])))
        .unzip()
}

pub fn kinematics(displacement: &[f64], times_yr: &[f64]) -> Result<Kinematics> {
    let n = displacement.len();
    if n != times_yr.len() {
        return Err(Error::InvalidInput(format!("{n} samples with {} times", times_yr.len())));
    }
    if n < MIN_KINEMATIC_EPOCHS {
        return Err(Error::InvalidInput(format!("{n} epochs, need at least {MIN_KINEMATIC_EPOCHS}")));
    }
    if times_yr.windows(2).any(|w| w[1] == w[0]) {
        return Err(Error::Domain("repeated acquisition time".into()));
    }
    if times_yr.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("times must be strictly increasing".into()));
    }
    let (t1, velocity) = difference(times_yr, displacement);
    let (t2, acceleration) = difference(&t1, &velocity);
    let (_, jerk) = difference(&t2, &acceleration);

    // centred abscissa keeps the normal equations well conditioned
    let tm = times_yr.iter().sum::<f64>() / n as f64;
    let rows: Vec<Vec<f64>> = times_yr.iter().map(|t| vec![1.0, t - tm]).collect();
    let singular = || Error::Singular("normal equations for this epoch layout".into());
    let lin = least_squares(&rows, displacement).ok_or_else(singular)?;
    let rows: Vec<Vec<f64>> = times_yr.iter().map(|t| vec![1.0, t - tm, (t - tm) * (t - tm)]).collect();
    let quad = least_squares(&rows, displacement).ok_or_else(singular)?;
    Ok(Kinematics {
        times: times_yr.to_vec(),
        displacement: displacement.to_vec(),
        velocity,
        acceleration,
        jerk,
        mean_velocity: lin[1],
        mean_acceleration: 2.0 * quad[2],
    })
}

/// Ordered sequence of scatterers along a user-drawn line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub ids: Vec<usize>,
    pub acceleration: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub profile: usize,
    /// Position of the left flank within the profile.
    pub index: usize,
    pub left_id: usize,
    pub right_id: usize,
    /// Linear-interpolated zero position between the flanks, in `[0, 1]`.
    pub fraction: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InversionLines {
    pub crossings: Vec<Crossing>,
    /// Set when no profile contains both signs.
    pub single_sign: bool,
}

/// Sign changes of acceleration along each profile.
pub fn find_inversion_lines(profiles: &[Profile]) -> Result<InversionLines> {
    let mut out = InversionLines::default();
    let (mut pos, mut neg) = (false, false);
    for (p, prof) in profiles.iter().enumerate() {
        if prof.ids.len() != prof.acceleration.len() {
            return Err(Error::InvalidInput(format!("profile {p}: ids and accelerations differ in length")));
        }
        pos |= prof.acceleration.iter().any(|a| *a > 0.0);
        neg |= prof.acceleration.iter().any(|a| *a < 0.0);
        for (i, w) in prof.acceleration.windows(2).enumerate() {
            if w[0] * w[1] < 0.0 {
                out.crossings.push(Crossing {
                    profile: p,
                    index: i,
                    left_id: prof.ids[i],
                    right_id: prof.ids[i + 1],
                    fraction: w[0] / (w[0] - w[1]),
                });
            }
        }
    }
    out.single_sign = !(pos && neg);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_times(n: usize) -> Vec<f64> {
        (0..n).map(|k| k as f64).collect()
    }

    #[test]
    fn linear_series() {
        let t = unit_times(8);
        let d: Vec<f64> = t.iter().map(|t| 3.0 * t).collect();
        let k = kinematics(&d, &t).unwrap();
        assert!(k.velocity.iter().all(|v| (v - 3.0).abs() < 1e-12));
        assert!(k.acceleration.iter().all(|a| a.abs() < 1e-12));
        assert!((k.mean_velocity - 3.0).abs() < 1e-12);
        assert_eq!((k.velocity.len(), k.acceleration.len(), k.jerk.len()), (7, 6, 5));
    }

    #[test]
    fn quadratic_series() {
        let t: Vec<f64> = [0.0, 0.1, 0.35, 0.4, 0.9, 1.3].to_vec();
        let d: Vec<f64> = t.iter().map(|t| t * t).collect();
        let k = kinematics(&d, &t).unwrap();
        assert!(k.acceleration.iter().all(|a| (a - 2.0).abs() < 1e-9), "{:?}", k.acceleration);
        assert!(k.jerk.iter().all(|j| j.abs() < 1e-8));
        assert!((k.mean_acceleration - 2.0).abs() < 1e-9);
    }

    #[test]
    fn cubic_series() {
        let t = unit_times(10);
        let d: Vec<f64> = t.iter().map(|t| t * t * t).collect();
        let k = kinematics(&d, &t).unwrap();
        assert!(k.jerk.iter().all(|j| (j - 6.0).abs() < 1e-9));
    }

    #[test]
    fn bad_times() {
        assert!(matches!(kinematics(&[0.0; 4], &[0.0, 1.0, 1.0, 2.0]), Err(Error::Domain(_))));
        assert!(kinematics(&[0.0; 3], &[0.0, 1.0, 2.0]).is_err());
        assert!(kinematics(&[0.0; 4], &[0.0, 2.0, 1.0, 3.0]).is_err());
    }

    #[test]
    fn underflowing_times_are_singular() {
        let t = [0.0, 1e-200, 2e-200, 3e-200];
        let e = kinematics(&[0.0, 1.0, 2.0, 3.0], &t).unwrap_err();
        assert!(matches!(e, Error::Singular(_)));
        assert!(!e.is_input_error());
    }

    #[test]
    fn single_crossing() {
        let p = Profile {
            ids: vec![10, 11, 12, 13],
            acceleration: vec![-2.0, -1.0, 1.0, 2.0],
        };
        let r = find_inversion_lines(&[p]).unwrap();
        assert!(!r.single_sign);
        assert_eq!(r.crossings.len(), 1);
        let c = r.crossings[0];
        assert_eq!((c.index, c.left_id, c.right_id), (1, 11, 12));
        assert!((c.fraction - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_sign_profile() {
        let p = Profile {
            ids: vec![0, 1, 2],
            acceleration: vec![1.0, 2.0, 0.5],
        };
        let r = find_inversion_lines(&[p]).unwrap();
        assert!(r.crossings.is_empty() && r.single_sign);
    }
}
