use mmsar::coreg::{OffsetSample, OffsetSeries};
use mmsar::modal::{detrend, dynamic_stiffness, frequency_response, robust_z_scores, vibration_map, ModalSystem};
use nalgebra::DMatrix;
use num_complex::Complex;
use proptest::prelude::*;

/// Symmetric positive definite `n x n` matrix from a random factor.
fn spd(a: &[f64], n: usize, shift: f64) -> Vec<f64> {
    let f = DMatrix::from_row_slice(n, n, a);
    let m = &f * f.transpose() + DMatrix::identity(n, n) * shift;
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]).collect()
}

fn series(id: usize, d_rg: &[f64], d_az: &[f64]) -> OffsetSeries {
    let n = d_rg.len();
    OffsetSeries {
        point_id: id,
        pixel: (id, 0),
        samples: d_rg.iter().zip(d_az).map(|(&r, &a)| OffsetSample::new(r, a, 1.0, true)).collect(),
        epochs: (0..n).map(|k| 0.25 * k as f64).collect(),
        bands: (0..n).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn flexibility_inverts_dynamic_stiffness(
        fm in prop::collection::vec(-1.0f64..1.0, 16),
        fc in prop::collection::vec(-0.3f64..0.3, 16),
        fk in prop::collection::vec(-3.0f64..3.0, 16),
    ) {
        let n = 4;
        let sys = ModalSystem::new(n, spd(&fm, n, 0.5), spd(&fc, n, 0.01), spd(&fk, n, 1.0)).unwrap();
        let omegas: Vec<f64> = (1..=50).map(|i| 0.1 * i as f64).collect();
        let fr = frequency_response(&sys, &omegas).unwrap();
        for (w, h) in omegas.iter().zip(&fr.h) {
            let Some(h) = h else { continue };
            let z = dynamic_stiffness(&sys, *w);
            let hm = DMatrix::from_row_slice(n, n, h);
            let zm = DMatrix::from_row_slice(n, n, &z);
            let prod = hm * zm - DMatrix::<Complex<f64>>::identity(n, n);
            let err = prod.iter().map(|v| v.norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-8, "omega {w}: {err}");
        }
    }

    #[test]
    fn undamped_sdof_peaks_at_resonance(m in 0.5f64..5.0, k in 1.0f64..100.0) {
        let wn = (k / m).sqrt();
        let omegas: Vec<f64> = (1..400).map(|i| wn * (0.005 * i as f64 + 0.0013)).collect();
        let sys = ModalSystem::sdof(m, 0.0, k).unwrap();
        let mag: Vec<f64> = frequency_response(&sys, &omegas)
            .unwrap()
            .magnitude(0, 0)
            .into_iter()
            .map(|v| v.unwrap_or(f64::INFINITY))
            .collect();
        let peak = (0..mag.len()).fold(0, |b, i| if mag[i] > mag[b] { i } else { b });
        for i in 1..mag.len() {
            if omegas[i] < wn {
                prop_assert!(mag[i] > mag[i - 1]);
            }
            if i > peak {
                prop_assert!(mag[i] < mag[i - 1]);
            }
        }
    }

    #[test]
    fn energy_ignores_rigid_offset(
        d in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
        off in (-50.0f64..50.0, -50.0f64..50.0),
    ) {
        let rg: Vec<f64> = d.iter().map(|v| v.0).collect();
        let az: Vec<f64> = d.iter().map(|v| v.1).collect();
        let rg2: Vec<f64> = rg.iter().map(|v| v + off.0).collect();
        let az2: Vec<f64> = az.iter().map(|v| v + off.1).collect();
        let a = vibration_map(&[series(0, &rg, &az)]).unwrap();
        let b = vibration_map(&[series(0, &rg2, &az2)]).unwrap();
        let (ea, eb) = (a.points[0].energy, b.points[0].energy);
        prop_assert!((ea - eb).abs() <= 1e-9 * ea.max(1.0), "{ea} vs {eb}");
    }

    #[test]
    fn z_scores_are_affine_invariant(
        e in prop::collection::vec(0.0f64..10.0, 8..40),
        a in 0.01f64..100.0,
        b in -100.0f64..100.0,
    ) {
        let scaled: Vec<f64> = e.iter().map(|v| a * v + b).collect();
        match (robust_z_scores(&e), robust_z_scores(&scaled)) {
            (Some(z1), Some(z2)) => {
                for (x, y) in z1.iter().zip(&z2) {
                    prop_assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0), "{x} vs {y}");
                }
            }
            (None, None) => {}
            other => prop_assert!(false, "degeneracy differs: {other:?}"),
        }
    }

    #[test]
    fn spectra_preserve_residual_energy(d in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4..32)) {
        let rg: Vec<f64> = d.iter().map(|v| v.0).collect();
        let az: Vec<f64> = d.iter().map(|v| v.1).collect();
        let s = series(3, &rg, &az);
        let map = vibration_map(std::slice::from_ref(&s)).unwrap();
        let p = &map.points[0];
        let z: Vec<Complex<f64>> = rg.iter().zip(&az).map(|(&r, &a)| Complex::new(r, a)).collect();
        let resid = detrend(&s.epochs, &z);
        let time: f64 = resid.iter().map(|v| v.norm_sqr()).sum();
        let freq: f64 = p.spectrum.iter().map(|v| v.norm_sqr()).sum();
        prop_assert!((time - freq).abs() <= 1e-9 * time.max(1e-300), "{time} vs {freq}");
        prop_assert!((time - p.energy).abs() <= 1e-9 * time.max(1e-300));
        let split: f64 = p.spectrum_rg.iter().chain(&p.spectrum_az).map(|v| v.norm_sqr()).sum();
        prop_assert!((time - split).abs() <= 1e-9 * time.max(1e-300));
    }
}
