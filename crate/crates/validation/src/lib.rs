//! Fixtures shared by the acceptance checks.

use mmsar::raster::{dft2, idft2};
use mmsar::{AcquisitionMeta, ComplexRaster};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Broadside X-band geometry at 5 km.
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

/// Random n×n image low-passed to a quarter of the band in both axes.
pub fn textured(n: usize, seed: u64) -> ComplexRaster<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lim = n / 4;
    let spec = ComplexRaster::from_fn(n, n, meta(), |r, c| {
        let (a, b) = (r.min(n - r), c.min(n - c));
        let z = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if a < lim && b < lim {
            z
        } else {
            Complex::default()
        }
    })
    .unwrap();
    idft2(&spec).unwrap()
}

/// `img` moved by (d_rg, d_az) px with a spectral phase ramp.
pub fn shifted(img: &ComplexRaster<f64>, d_rg: f64, d_az: f64) -> ComplexRaster<f64> {
    let mut spec = dft2(img).unwrap();
    let (n_az, n_rg) = spec.shape();
    let f = |k: usize, n: usize| if k <= n / 2 { k as f64 } else { k as f64 - n as f64 } / n as f64;
    for r in 0..n_az {
        for c in 0..n_rg {
            let ph = -std::f64::consts::TAU * (f(r, n_az) * d_az + f(c, n_rg) * d_rg);
            let v = spec.get(r, c) * Complex::from_polar(1.0, ph);
            spec.set(r, c, v);
        }
    }
    idft2(&spec).unwrap()
}
