mod common;

use common::{long_aperture_scene, shifted, textured};
use mmsar::coreg::{match_patch, track, CoregConfig, Pairing};
use mmsar::subaperture::{decompose, make_plan};
use proptest::prelude::*;

fn cfg() -> CoregConfig {
    CoregConfig {
        skimming: 1,
        window: [16, 16],
        ..CoregConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn offsets_are_antisymmetric(seed in any::<u64>(), d_rg in -2.0f64..2.0, d_az in -2.0f64..2.0) {
        let a = textured(64, seed);
        let b = shifted(&a, d_rg, d_az);
        let ab = match_patch(&a, &b, (32, 32), &cfg()).unwrap();
        let ba = match_patch(&b, &a, (32, 32), &cfg()).unwrap();
        prop_assert!(ab.peak_corr > 0.9 && ba.peak_corr > 0.9);
        prop_assert!((ab.d_rg + ba.d_rg).abs() <= 0.01, "{} vs {}", ab.d_rg, ba.d_rg);
        prop_assert!((ab.d_az + ba.d_az).abs() <= 0.01, "{} vs {}", ab.d_az, ba.d_az);
    }

    #[test]
    fn peak_corr_is_bounded(seed_a in any::<u64>(), seed_b in any::<u64>(), r in 8usize..56, c in 8usize..56) {
        let a = textured(64, seed_a);
        let b = textured(64, seed_b);
        let s = match_patch(&a, &b, (r, c), &cfg()).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s.peak_corr), "{}", s.peak_corr);
    }

    #[test]
    fn equal_patches_correlate_perfectly(seed in any::<u64>(), r in 8usize..56, c in 8usize..56) {
        let a = textured(64, seed);
        let s = match_patch(&a, &a, (r, c), &cfg()).unwrap();
        prop_assert!((s.peak_corr - 1.0).abs() <= 1e-12, "{}", s.peak_corr);
        prop_assert!(s.d_rg.abs() <= 1e-9 && s.d_az.abs() <= 1e-9);
    }

    #[test]
    fn refinement_recovers_spectral_shifts(seed in any::<u64>(), d_rg in -0.5f64..0.5, d_az in -0.5f64..0.5) {
        let a = textured(64, seed);
        let b = shifted(&a, d_rg, d_az);
        let c = cfg();
        let s = match_patch(&a, &b, (32, 32), &c).unwrap();
        let tol = 0.05f64.max(2.0 / c.oversampling as f64);
        prop_assert!(s.peak_corr > 0.95, "{}", s.peak_corr);
        prop_assert!((s.d_rg - d_rg).abs() <= tol, "rg {} vs {d_rg}", s.d_rg);
        prop_assert!((s.d_az - d_az).abs() <= tol, "az {} vs {d_az}", s.d_az);
    }
}

#[test]
fn warp_leaves_zero_mean_static_residuals() {
    let shape = (1024, 64);
    let pixels: Vec<(f64, f64)> = (0..12)
        .map(|i| (300.0 + 36.0 * i as f64, 10.0 + 4.0 * (i % 11) as f64))
        .collect();
    let raw = long_aperture_scene(&pixels, shape).simulate_raw::<f64>(shape.0, shape.1, 0).unwrap();
    let plan = make_plan(&raw.meta, shape, 16, 0.5).unwrap();
    let stack = decompose(&raw, &plan).unwrap();
    let cfg = CoregConfig {
        n_points: 12,
        skimming: 1,
        min_spacing: 10,
        window: [16, 16],
        pairing: Pairing::FixedMaster,
        ..CoregConfig::default()
    };
    let out = track(&stack, &cfg).unwrap();
    assert!(out.series.len() >= 8, "{} points tracked", out.series.len());
    for k in 0..stack.len() {
        let valid: Vec<_> = out.series.iter().map(|s| s.samples[k]).filter(|s| s.valid).collect();
        let n = valid.len() as f64;
        let mean_rg = valid.iter().map(|s| s.d_rg).sum::<f64>() / n;
        let mean_az = valid.iter().map(|s| s.d_az).sum::<f64>() / n;
        assert!(mean_rg.abs() < 0.01 && mean_az.abs() < 0.01, "epoch {k}: ({mean_rg}, {mean_az})");
    }
}
