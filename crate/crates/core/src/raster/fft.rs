use num_complex::Complex;
use rustfft::FftPlanner;

use super::ComplexRaster;
use crate::error::Result;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// Along each column (transform length `n_az`).
    Azimuth,
    /// Along each row (transform length `n_rg`).
    Range,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Unitary transform of `img` along one axis, in place.
pub fn fft_axis<T: Real>(img: &mut ComplexRaster<T>, axis: Axis, dir: Direction) {
    let (n_az, n_rg) = img.shape();
    let mut planner = FftPlanner::<T>::new();
    let len = match axis {
        Axis::Azimuth => n_az,
        Axis::Range => n_rg,
    };
    let plan = match dir {
        Direction::Forward => planner.plan_fft_forward(len),
        Direction::Inverse => planner.plan_fft_inverse(len),
    };
    let scale = T::one() / T::from_usize_lossy(len).sqrt();
    match axis {
        Axis::Range => {
            let data = img.data_mut();
            plan.process(data);
            for z in data.iter_mut() {
                *z = *z * scale;
            }
        }
        Axis::Azimuth => {
            let mut col = vec![Complex::<T>::default(); n_az];
            for c in 0..n_rg {
                for r in 0..n_az {
                    col[r] = img.get(r, c);
                }
                plan.process(&mut col);
                for r in 0..n_az {
                    img.set(r, c, col[r] * scale);
                }
            }
        }
    }
}

/// Unitary 2-D DFT.
pub fn dft2<T: Real>(img: &ComplexRaster<T>) -> Result<ComplexRaster<T>> {
    let mut out = img.clone();
    fft_axis(&mut out, Axis::Range, Direction::Forward);
    fft_axis(&mut out, Axis::Azimuth, Direction::Forward);
    Ok(out)
}

/// Inverse of [`dft2`].
pub fn idft2<T: Real>(spec: &ComplexRaster<T>) -> Result<ComplexRaster<T>> {
    let mut out = spec.clone();
    fft_axis(&mut out, Axis::Range, Direction::Inverse);
    fft_axis(&mut out, Axis::Azimuth, Direction::Inverse);
    Ok(out)
}
