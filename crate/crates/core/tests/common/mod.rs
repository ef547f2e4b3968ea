#![allow(dead_code)]

use mmsar::raster::{dft2, idft2};
use mmsar::scene::{Scatterer, SceneDefinition};
use mmsar::{AcquisitionMeta, ComplexRaster};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

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

pub fn random_raster(n_az: usize, n_rg: usize, seed: u64) -> ComplexRaster<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexRaster::from_fn(n_az, n_rg, meta(), |_, _| {
        Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
    .unwrap()
}

/// Random image low-passed to a quarter of the band in both axes.
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

/// `img` with its content moved by (d_rg, d_az) px through a spectral phase ramp.
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

/// Short-aperture broadside geometry that keeps raw simulation cheap:
/// the synthetic aperture spans 100 lines.
pub fn small_meta() -> AcquisitionMeta {
    AcquisitionMeta {
        wavelength: 0.01,
        aperture_length: 50.0,
        ..meta()
    }
}

/// Static point scene on `small_meta` with scatterers given as focused
/// pixels (row, col).
pub fn point_scene(pixels: &[(f64, f64)], rcs: &[f64], noise_sigma: f64, shape: (usize, usize)) -> SceneDefinition {
    let m = small_meta();
    let dx = m.v_p / m.prf;
    let dr = m.range_spacing();
    SceneDefinition {
        extent_rg: shape.1 as f64 * dr,
        extent_az: shape.0 as f64 * dx,
        chirp_bandwidth: 40e6,
        chirp_duration: 1e-6,
        scatterers: pixels
            .iter()
            .zip(rcs)
            .map(|(&(r, c), &a)| Scatterer::fixed(m.near_range + c * dr, r * dx, a))
            .collect(),
        noise_sigma,
        meta: m,
    }
}

pub fn max_abs_diff(a: &ComplexRaster<f64>, b: &ComplexRaster<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &ComplexRaster<f64>) -> f64 {
    a.data().iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Broadside scene with a 600-line synthetic aperture and 15 m range cells:
/// enough time-bandwidth product for edge sub-apertures to stay unbiased,
/// with range migration well under a cell.
pub fn long_aperture_scene(pixels: &[(f64, f64)], shape: (usize, usize)) -> SceneDefinition {
    let m = AcquisitionMeta {
        wavelength: 0.03,
        near_range: 10_000.0,
        aperture_length: 300.0,
        fs_rg: 10e6,
        ..meta()
    };
    let dx = m.v_p / m.prf;
    let dr = m.range_spacing();
    SceneDefinition {
        extent_rg: shape.1 as f64 * dr,
        extent_az: shape.0 as f64 * dx,
        chirp_bandwidth: 8e6,
        chirp_duration: 2e-6,
        scatterers: pixels
            .iter()
            .map(|&(r, c)| Scatterer::fixed(m.near_range + c * dr, r * dx, 1.0))
            .collect(),
        noise_sigma: 0.0,
        meta: m,
    }
}

/// Writes a planted persistent-scatterer stack, its stack list and a GNSS
/// table into `dir`. Returns (stack list, gnss table).
pub fn write_ps_fixture(dir: &std::path::Path) -> (std::path::PathBuf, std::path::PathBuf) {
    use mmsar::pipeline::{GeoAnnotation, StackList};
    use mmsar::psinsar::{mm_to_phase, planted_stack, PairGeometry, PhaseGeometry, DAYS_PER_YEAR};
    use mmsar::raster::io::write_raster;

    std::fs::create_dir_all(dir).unwrap();
    let lambda = 0.031;
    let times: Vec<f64> = (0..30).map(|k| 11.0 * k as f64).collect();
    let master = times.len() / 2;
    let points: Vec<(usize, usize)> = (0..10).map(|i| (2 + 2 * i, 3 + (5 * i) % 18)).collect();
    let velocity = |i: usize| -6.0 + 0.8 * i as f64;
    let t_m = times[master];
    let geometry = PhaseGeometry {
        wavelength: lambda,
        range_spacing: 2.0,
        reference_col: 12.0,
        pairs: (0..times.len())
            .map(|k| {
                let b_perp = if k == master { 0.0 } else { 40.0 * (k % 5) as f64 - 80.0 };
                Some(PairGeometry { b_perp, incidence: 0.45, slant_range: 7e5, alpha: 0.0 })
            })
            .collect(),
        heights: None,
    };
    let phase = |i: usize, k: usize| {
        let flat = geometry.flat_earth(&geometry.pairs[k].unwrap(), points[i].1 as f64);
        flat + mm_to_phase(velocity(i) * (times[k] - t_m) / DAYS_PER_YEAR, lambda)
    };
    let stack = planted_stack(&meta(), (24, 24), &times, &points, 10.0, phase, 11).unwrap();
    let mut images = Vec::new();
    for (k, img) in stack.images.iter().enumerate() {
        let name = format!("slc_{k:02}.mmsr");
        write_raster(&dir.join(&name), img).unwrap();
        images.push(std::path::PathBuf::from(name));
    }
    let geo = GeoAnnotation { lat0: 36.63, lon0: 42.81, dlat_per_row: -1e-4, dlon_per_col: 1e-4 };
    let list = StackList {
        images,
        acquisition_times_days: times.clone(),
        master_index: None,
        geometry,
        geo: Some(geo),
    };
    let list_path = dir.join("stack.json");
    std::fs::write(&list_path, serde_json::to_string_pretty(&list).unwrap()).unwrap();

    let gnss_path = dir.join("gnss.csv");
    let mut w = csv::Writer::from_path(&gnss_path).unwrap();
    w.write_record(["lat_deg", "lon_deg", "vel_mm_yr"]).unwrap();
    for (i, &(r, c)) in points.iter().enumerate().step_by(2) {
        let (lat, lon) = geo.locate(r, c);
        let v = velocity(i) + 0.3 * (i as f64).sin();
        w.write_record([format!("{}", lat + 2e-5), format!("{}", lon - 1e-5), format!("{v}")]).unwrap();
    }
    w.flush().unwrap();
    (list_path, gnss_path)
}
