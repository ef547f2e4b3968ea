mod common;

use mmsar::psinsar::{
    compare_gnss, fit_rice, kinematics, mm_to_phase, phase_model, planted_stack, GnssRecord, PairGeometry,
    PhaseGeometry, PsVelocity,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn rice_samples(nu: f64, sigma: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Normal::new(0.0, sigma).unwrap();
    (0..n).map(|_| (nu + g.sample(&mut rng)).hypot(g.sample(&mut rng))).collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dispersion_is_scale_invariant(nu in 0.0f64..20.0, n in 8usize..60, seed in any::<u64>(), log_c in -3.0f64..3.0) {
        let x = rice_samples(nu, 1.0, n, seed);
        let c = 10f64.powf(log_c);
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let (a, b) = (fit_rice(&x).unwrap(), fit_rice(&scaled).unwrap());
        prop_assert_eq!(a.status, b.status);
        if a.d_a.is_finite() {
            prop_assert!((a.d_a - b.d_a).abs() <= 1e-6, "{} vs {}", a.d_a, b.d_a);
        } else {
            prop_assert!(b.d_a.is_infinite());
        }
    }

    #[test]
    fn kinematics_is_linear(
        xy in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 4..40),
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
        gaps in prop::collection::vec(0.02f64..0.3, 40),
    ) {
        let n = xy.len();
        let mut t = vec![0.0];
        for g in &gaps[..n - 1] {
            t.push(t.last().unwrap() + g);
        }
        let x: Vec<f64> = xy.iter().map(|v| v.0).collect();
        let y: Vec<f64> = xy.iter().map(|v| v.1).collect();
        let z: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (kx, ky, kz) = (kinematics(&x, &t).unwrap(), kinematics(&y, &t).unwrap(), kinematics(&z, &t).unwrap());
        let tol = 1e-9;
        let series = |k: &mmsar::psinsar::Kinematics| [k.velocity.clone(), k.acceleration.clone(), k.jerk.clone()];
        for ((sx, sy), sz) in series(&kx).iter().zip(series(&ky).iter()).zip(series(&kz).iter()) {
            let scale = sx.iter().chain(sy).map(|v| v.abs()).fold(1.0, f64::max) * (a.abs() + b.abs()).max(1.0);
            for ((p, q), r) in sx.iter().zip(sy).zip(sz) {
                prop_assert!((a * p + b * q - r).abs() <= tol * scale, "{} vs {r}", a * p + b * q);
            }
        }
        prop_assert!(close(a * kx.mean_velocity + b * ky.mean_velocity, kz.mean_velocity, tol));
        prop_assert!(close(a * kx.mean_acceleration + b * ky.mean_acceleration, kz.mean_acceleration, tol));
    }

    #[test]
    fn derivative_lengths(n in 4usize..100) {
        let t: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let d: Vec<f64> = t.iter().map(|v| v.sin()).collect();
        let k = kinematics(&d, &t).unwrap();
        prop_assert_eq!(
            (k.displacement.len(), k.velocity.len(), k.acceleration.len(), k.jerk.len()),
            (n, n - 1, n - 2, n - 3)
        );
    }

    #[test]
    fn correlation_ignores_common_velocity_shift(
        pts in prop::collection::vec((-0.01f64..0.01, -0.01f64..0.01, -10.0f64..10.0), 3..20),
        gnss in prop::collection::vec((-0.01f64..0.01, -0.01f64..0.01, -10.0f64..10.0), 2..10),
        shift in -100.0f64..100.0,
    ) {
        let ps: Vec<PsVelocity> = pts
            .iter()
            .enumerate()
            .map(|(id, p)| PsVelocity { id, lat_deg: 36.6 + p.0, lon_deg: 42.8 + p.1, vel_mm_yr: p.2 })
            .collect();
        let moved: Vec<PsVelocity> = ps.iter().map(|p| PsVelocity { vel_mm_yr: p.vel_mm_yr + shift, ..*p }).collect();
        let g: Vec<GnssRecord> = gnss
            .iter()
            .map(|p| GnssRecord { lat_deg: 36.6 + p.0, lon_deg: 42.8 + p.1, vel_mm_yr: p.2 })
            .collect();
        let a = compare_gnss(&ps, &g, 5000.0).unwrap();
        let b = compare_gnss(&moved, &g, 5000.0).unwrap();
        let ids = |r: &mmsar::psinsar::ComparisonReport| r.pairs.iter().map(|p| (p.gnss_index, p.ps_id)).collect::<Vec<_>>();
        prop_assert_eq!(ids(&a), ids(&b));
        match (a.correlation, b.correlation) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}"),
            (x, y) => prop_assert_eq!(x.is_none(), y.is_none()),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn phase_model_round_trip(
        velocity in -12.0f64..12.0,
        baselines in prop::collection::vec(-300.0f64..300.0, 24),
        heights in prop::collection::vec(0.0f64..40.0, 5),
        atmo_seed in any::<u64>(),
        noise_seed in any::<u64>(),
    ) {
        let lambda = 0.031;
        let n_img = baselines.len();
        let times: Vec<f64> = (0..n_img).map(|k| 11.0 * k as f64).collect();
        let master = n_img / 2;
        let shape = (4, 16);
        let pixels: Vec<(usize, usize)> = (0..5).map(|i| (i % 4, 2 + 3 * i)).collect();
        let pairs: Vec<Option<PairGeometry>> = (0..n_img)
            .map(|k| {
                let b_perp = if k == master { 0.0 } else { baselines[k] };
                Some(PairGeometry { b_perp, incidence: 0.45, slant_range: 700_000.0, alpha: 0.0 })
            })
            .collect();
        let mut h = vec![0.0; shape.0 * shape.1];
        for (&(r, c), &z) in pixels.iter().zip(&heights) {
            h[r * shape.1 + c] = z;
        }
        let geometry = PhaseGeometry { wavelength: lambda, range_spacing: 1.5, reference_col: 8.0, pairs, heights: Some(h) };

        // differential atmosphere: zero on the master
        let mut rng = ChaCha8Rng::seed_from_u64(atmo_seed);
        let g = Normal::new(0.0, 1.5).unwrap();
        let atmo: Vec<Vec<f64>> = (0..n_img)
            .map(|k| (0..shape.0 * shape.1).map(|_| if k == master { 0.0 } else { g.sample(&mut rng) }).collect())
            .collect();
        let disp = |k: usize| mm_to_phase(velocity * (times[k] - times[master]) / 365.25, lambda);
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let noise_g = Normal::new(0.0, 0.02).unwrap();
        let noise: Vec<Vec<f64>> = (0..pixels.len())
            .map(|_| (0..n_img).map(|k| if k == master { 0.0 } else { noise_g.sample(&mut rng) }).collect())
            .collect();
        let phase = |i: usize, k: usize| {
            let (r, c) = pixels[i];
            let pair = geometry.pairs[k].unwrap();
            geometry.flat_earth(&pair, c as f64)
                + geometry.topographic(&pair, c as f64, heights[i])
                + atmo[k][r * shape.1 + c]
                + disp(k)
                + noise[i][k]
        };
        let meta = common::meta();
        let stack = planted_stack(&meta, shape, &times, &pixels, 1e6, phase, 1).unwrap();
        let mut stack = stack;
        stack.master_index = master;
        let out = phase_model(&stack, &pixels, &geometry, Some(&atmo)).unwrap();
        for p in &out {
            prop_assert!(p.reliable);
            let sq: f64 = p.components.iter().enumerate().map(|(k, c)| (c.displacement - disp(k)).powi(2)).sum();
            let rms = (sq / n_img as f64).sqrt();
            prop_assert!(rms < 0.05, "rms {rms}");
        }
    }
}
