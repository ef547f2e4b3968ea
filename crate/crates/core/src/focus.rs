//! Range-Doppler focusing of raw echoes into a single-look-complex image.
//!
//! Range compression is a frequency-domain matched filter against the
//! transmitted chirp. Azimuth compression correlates every range gate with
//! the hyperbolic phase history of a point at that gate, spanning exactly
//! the synthetic aperture `L` around the squinted beam centre. No range cell
//! migration correction is applied.

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::raster::{dft2, AcquisitionMeta, ComplexRaster};
use crate::scalar::Real;

/// `out[j] = sum_m x[j + m] * conj(reference[m])` for `m` in `offset..offset+len`,
/// zero outside `x`. Linear (not circular) correlation via FFT.
fn correlate_lines<T: Real>(lines: &mut [Vec<Complex<T>>], reference: &[Complex<T>], offset: isize) {
    let Some(n) = lines.first().map(Vec::len) else {
        return;
    };
    let m_lo = offset;
    let m_hi = offset + reference.len() as isize - 1;
    let pad = n + 2 * m_hi.unsigned_abs().max(m_lo.unsigned_abs()) + 1;
    let mut planner = FftPlanner::<T>::new();
    let fwd = planner.plan_fft_forward(pad);
    let inv = planner.plan_fft_inverse(pad);
    let mut r = vec![Complex::<T>::default(); pad];
    for (i, &h) in reference.iter().enumerate() {
        let m = m_lo + i as isize;
        r[m.rem_euclid(pad as isize) as usize] = h;
    }
    fwd.process(&mut r);
    let scale = T::one() / T::from_usize_lossy(pad);
    let rc: Vec<Complex<T>> = r.iter().map(|z| z.conj() * scale).collect();
    lines.par_iter_mut().for_each_init(
        || vec![Complex::<T>::default(); pad],
        |buf, line| {
            buf[..n].copy_from_slice(line);
            buf[n..].fill(Complex::default());
            fwd.process(buf);
            for (b, h) in buf.iter_mut().zip(&rc) {
                *b = *b * h;
            }
            inv.process(buf);
            line.copy_from_slice(&buf[..n]);
        },
    );
}

/// Sampled reference chirp `exp(j pi K t^2)` for `|t| <= duration/2`, with the
/// index of its first sample relative to the chirp centre.
pub fn reference_chirp<T: Real>(fs: f64, bandwidth: f64, duration: f64) -> (Vec<Complex<T>>, isize) {
    let k_r = bandwidth / duration;
    let half = 0.5 * duration * fs;
    let lo = (-half).ceil() as isize;
    let hi = half.floor() as isize;
    let taps = (lo..=hi)
        .map(|m| {
            let t = m as f64 / fs;
            let ph = std::f64::consts::PI * k_r * t * t;
            Complex::new(T::lit(ph.cos()), T::lit(ph.sin()))
        })
        .collect();
    (taps, lo)
}

/// Matched filtering along range with the transmitted chirp.
pub fn range_compress<T: Real>(raw: &ComplexRaster<T>, chirp_bandwidth: f64, chirp_duration: f64) -> Result<ComplexRaster<T>> {
    let fs = raw.meta.fs_rg;
    if !(chirp_bandwidth > 0.0 && chirp_duration > 0.0) {
        return Err(Error::InvalidChirp("bandwidth and duration must be positive".into()));
    }
    if chirp_bandwidth > fs {
        return Err(Error::InvalidChirp(format!(
            "chirp bandwidth {chirp_bandwidth} Hz exceeds range sampling {fs} Hz"
        )));
    }
    let (reference, offset) = reference_chirp::<T>(fs, chirp_bandwidth, chirp_duration);
    let (n_az, n_rg) = raw.shape();
    let mut lines: Vec<Vec<Complex<T>>> = (0..n_az).map(|r| raw.row(r).to_vec()).collect();
    correlate_lines(&mut lines, &reference, offset);
    let data = lines.into_iter().flatten().collect();
    ComplexRaster::new(n_az, n_rg, data, raw.meta.clone())
}

/// Azimuth reference for the range gate at beam-centre slant range `range`.
pub fn azimuth_reference<T: Real>(meta: &AcquisitionMeta, range: f64) -> (Vec<Complex<T>>, isize) {
    let (s, c) = meta.gamma.sin_cos();
    let r0 = range * s;
    let uc = -range * c;
    let dx = meta.azimuth_spacing();
    let k_max = (0.5 * meta.aperture_length / dx + 1e-9).floor() as isize;
    let four_pi_over_lambda = 4.0 * std::f64::consts::PI / meta.wavelength;
    let taps = (-k_max..=k_max)
        .map(|k| {
            let u = uc + k as f64 * dx;
            let ph = -four_pi_over_lambda * r0.hypot(u);
            Complex::new(T::lit(ph.cos()), T::lit(ph.sin()))
        })
        .collect();
    (taps, -k_max)
}

/// Per-gate azimuth matched filtering of range-compressed data.
pub fn azimuth_compress<T: Real>(rc: &ComplexRaster<T>) -> Result<ComplexRaster<T>> {
    rc.meta.validate()?;
    let (n_az, n_rg) = rc.shape();
    let mut out = ComplexRaster::zeros(n_az, n_rg, rc.meta.clone())?;
    let columns: Vec<Vec<Complex<T>>> = (0..n_rg)
        .into_par_iter()
        .map(|c| {
            let mut col = vec![(0..n_az).map(|r| rc.get(r, c)).collect::<Vec<_>>()];
            let (reference, offset) = azimuth_reference::<T>(&rc.meta, rc.meta.slant_range(c as f64));
            correlate_lines(&mut col, &reference, offset);
            col.pop().unwrap()
        })
        .collect();
    for (c, col) in columns.iter().enumerate() {
        for (r, z) in col.iter().enumerate() {
            out.set(r, c, *z);
        }
    }
    out.meta.chirp_bandwidth = None;
    out.meta.chirp_duration = None;
    Ok(out)
}

/// Range then azimuth compression using the chirp recorded in the raw meta.
pub fn focus<T: Real>(raw: &ComplexRaster<T>) -> Result<ComplexRaster<T>> {
    let (Some(bw), Some(dur)) = (raw.meta.chirp_bandwidth, raw.meta.chirp_duration) else {
        return Err(Error::InvalidMeta("raw meta lacks chirp_bandwidth/chirp_duration".into()));
    };
    azimuth_compress(&range_compress(raw, bw, dur)?)
}

/// Azimuth smear `2 L v / (v_p sin(gamma))` of a target moving along track at
/// `v_az` during the aperture time `L / v_p`.
pub fn motion_defocus(meta: &AcquisitionMeta, v_az: f64) -> f64 {
    2.0 * meta.aperture_length * v_az / (meta.v_p * meta.gamma.sin())
}

/// Sub-pixel position of the magnitude peak nearest to `around`.
///
/// The integer maximum inside the `(2 half + 1)`-square patch is refined on a
/// `1/factor` grid over +/-1 px by evaluating the band-limited interpolant of
/// the whole image (azimuth frequencies folded around the image's Doppler
/// centroid), then by a parabola through the best sample and its neighbours.
pub fn locate_peak<T: Real>(img: &ComplexRaster<T>, around: (usize, usize), half: usize, factor: usize) -> Result<(f64, f64)> {
    if factor == 0 {
        return Err(Error::InvalidInput("oversampling factor must be >= 1".into()));
    }
    let (n_az, n_rg) = img.shape();
    if around.0 >= n_az || around.1 >= n_rg {
        return Err(Error::OutOfRange(format!(
            "peak search at {around:?} leaves the {n_az}x{n_rg} image"
        )));
    }
    let mut peak = around;
    let mut peak_v = -1.0;
    for r in around.0.saturating_sub(half)..=(around.0 + half).min(n_az - 1) {
        for c in around.1.saturating_sub(half)..=(around.1 + half).min(n_rg - 1) {
            let v = img.get(r, c).norm().as_f64();
            if v > peak_v {
                peak_v = v;
                peak = (r, c);
            }
        }
    }

    let spec = dft2(img)?;
    let centre = img.meta.doppler_center * n_az as f64 / img.meta.prf;
    let az_freq: Vec<f64> = (0..n_az)
        .map(|k| k as f64 + n_az as f64 * ((centre - k as f64) / n_az as f64).round())
        .collect();
    let rg_freq: Vec<f64> = (0..n_rg)
        .map(|l| if l <= n_rg / 2 { l as f64 } else { l as f64 - n_rg as f64 })
        .collect();
    let n = 2 * factor + 1;
    let offsets: Vec<f64> = (0..n).map(|i| (i as f64 - factor as f64) / factor as f64).collect();
    let tau = std::f64::consts::TAU;

    // column pass: a[j][k] = sum_l X[k, l] exp(j 2 pi f_l c_j / M)
    let cols: Vec<Vec<Complex<f64>>> = offsets
        .iter()
        .map(|&dc| {
            let c = peak.1 as f64 + dc;
            let tw: Vec<Complex<f64>> = rg_freq
                .iter()
                .map(|&f| Complex::from_polar(1.0, tau * f * c / n_rg as f64))
                .collect();
            (0..n_az)
                .map(|k| {
                    spec.row(k)
                        .iter()
                        .zip(&tw)
                        .map(|(x, w)| Complex::new(x.re.as_f64(), x.im.as_f64()) * w)
                        .sum()
                })
                .collect()
        })
        .collect();
    let mut mag = vec![0.0; n * n];
    for (i, &dr) in offsets.iter().enumerate() {
        let r = peak.0 as f64 + dr;
        let tw: Vec<Complex<f64>> = az_freq
            .iter()
            .map(|&f| Complex::from_polar(1.0, tau * f * r / n_az as f64))
            .collect();
        for (j, a) in cols.iter().enumerate() {
            mag[i * n + j] = a.iter().zip(&tw).map(|(x, w)| x * w).sum::<Complex<f64>>().norm();
        }
    }

    let best = (0..n * n).fold(0, |b, i| if mag[i] > mag[b] { i } else { b });
    let (br, bc) = (best / n, best % n);
    let vertex = |a: f64, b: f64, c: f64| {
        let den = a - 2.0 * b + c;
        if den.abs() < 1e-300 {
            0.0
        } else {
            (0.5 * (a - c) / den).clamp(-0.5, 0.5)
        }
    };
    let dr = if br > 0 && br + 1 < n {
        vertex(mag[best - n], mag[best], mag[best + n])
    } else {
        0.0
    };
    let dc = if bc > 0 && bc + 1 < n {
        vertex(mag[best - 1], mag[best], mag[best + 1])
    } else {
        0.0
    };
    let f = factor as f64;
    Ok((
        peak.0 as f64 + (br as f64 - f + dr) / f,
        peak.1 as f64 + (bc as f64 - f + dc) / f,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::test_support::meta;

    #[test]
    fn zero_in_zero_out() {
        let mut m = meta();
        m.chirp_bandwidth = Some(10e6);
        m.chirp_duration = Some(1e-6);
        let z = ComplexRaster::<f64>::zeros(32, 16, m).unwrap();
        let rc = range_compress(&z, 10e6, 1e-6).unwrap();
        assert!(rc.data().iter().all(|v| v.norm() == 0.0));
        let f = focus(&z).unwrap();
        assert!(f.data().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn chirp_wider_than_sampling_is_rejected() {
        let z = ComplexRaster::<f64>::zeros(4, 4, meta()).unwrap();
        assert!(matches!(range_compress(&z, 60e6, 1e-6), Err(Error::InvalidChirp(_))));
    }

    #[test]
    fn focus_needs_chirp() {
        let z = ComplexRaster::<f64>::zeros(4, 4, meta()).unwrap();
        assert!(matches!(focus(&z), Err(Error::InvalidMeta(_))));
    }

    #[test]
    fn correlation_matches_direct_sum() {
        let x: Vec<Complex<f64>> = (0..20).map(|i| Complex::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let h: Vec<Complex<f64>> = (0..5).map(|i| Complex::new(1.0 + i as f64, -(i as f64))).collect();
        let offset = -2;
        let mut lines = vec![x.clone()];
        correlate_lines(&mut lines, &h, offset);
        for j in 0..x.len() {
            let mut want = Complex::default();
            for (i, hv) in h.iter().enumerate() {
                let idx = j as isize + offset + i as isize;
                if idx >= 0 && (idx as usize) < x.len() {
                    want += x[idx as usize] * hv.conj();
                }
            }
            assert!((lines[0][j] - want).norm() < 1e-10, "{j}");
        }
    }

    #[test]
    fn motion_defocus_scales() {
        let m = meta();
        assert!((motion_defocus(&m, 1.0) - 2.0 * 100.0 / 50.0).abs() < 1e-12);
        assert!(motion_defocus(&m, -1.0) < 0.0);
    }
}
