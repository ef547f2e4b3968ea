use num_complex::Complex;
use rustfft::FftPlanner;

use super::{CoregConfig, OffsetSample};
use crate::error::{Error, Result};
use crate::raster::{dft2, idft2, ComplexRaster};
use crate::scalar::Real;

/// Candidate tie points: pixels ranked by amplitude (row-major order breaks
/// ties), thinned by `min_spacing`, decimated by `skimming`, capped at
/// `n_points`. Points closer than half a window to the border are excluded.
pub fn select_points<T: Real>(master: &ComplexRaster<T>, cfg: &CoregConfig) -> Result<Vec<(usize, usize)>> {
    cfg.validate()?;
    let (n_az, n_rg) = master.shape();
    let [w_az, w_rg] = cfg.window;
    if n_az < w_az || n_rg < w_rg {
        return Err(Error::InvalidInput(format!(
            "image {n_az}x{n_rg} is smaller than the {w_az}x{w_rg} window"
        )));
    }
    let (h_az, h_rg) = (w_az / 2, w_rg / 2);
    let amp = master.amplitude();
    let mut ranked: Vec<usize> = (h_az..n_az - h_az)
        .flat_map(|r| (h_rg..n_rg - h_rg).map(move |c| r * n_rg + c))
        .collect();
    ranked.sort_by(|&a, &b| amp[b].partial_cmp(&amp[a]).unwrap_or(std::cmp::Ordering::Equal));

    let wanted = cfg.n_points.saturating_mul(cfg.skimming);
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for idx in ranked {
        if kept.len() >= wanted {
            break;
        }
        let p = (idx / n_rg, idx % n_rg);
        if cfg.min_spacing > 0
            && kept
                .iter()
                .any(|q| p.0.abs_diff(q.0).max(p.1.abs_diff(q.1)) < cfg.min_spacing)
        {
            continue;
        }
        kept.push(p);
    }
    Ok(kept.into_iter().step_by(cfg.skimming).take(cfg.n_points).collect())
}

fn amplitude_patch<T: Real>(img: &ComplexRaster<T>, top: isize, left: isize, rows: usize, cols: usize) -> Option<Vec<f64>> {
    let (n_az, n_rg) = img.shape();
    if top < 0 || left < 0 || top as usize + rows > n_az || left as usize + cols > n_rg {
        return None;
    }
    let (top, left) = (top as usize, left as usize);
    let mut out = Vec::with_capacity(rows * cols);
    for r in top..top + rows {
        out.extend(img.row(r)[left..left + cols].iter().map(|z| z.norm().as_f64()));
    }
    Some(out)
}

/// Remove the mean in place, returning the remaining energy.
fn centre(v: &mut [f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
    v.iter().map(|x| x * x).sum()
}

/// Offset of `slave` relative to `master` at `at` (row, col).
pub fn match_patch<T: Real>(
    master: &ComplexRaster<T>,
    slave: &ComplexRaster<T>,
    at: (usize, usize),
    cfg: &CoregConfig,
) -> Result<OffsetSample> {
    match_patch_seeded(master, slave, at, cfg, (0, 0))
}

/// As [`match_patch`], with the integer search centred on `seed` (row, col).
pub fn match_patch_seeded<T: Real>(
    master: &ComplexRaster<T>,
    slave: &ComplexRaster<T>,
    at: (usize, usize),
    cfg: &CoregConfig,
    seed: (isize, isize),
) -> Result<OffsetSample> {
    if master.shape() != slave.shape() {
        return Err(Error::InvalidInput("master and slave differ in shape".into()));
    }
    let [rows, cols] = cfg.window;
    let top = at.0 as isize - (rows / 2) as isize;
    let left = at.1 as isize - (cols / 2) as isize;
    let mut tmpl = amplitude_patch(master, top, left, rows, cols)
        .ok_or_else(|| Error::OutOfRange(format!("window at {at:?} leaves the master image")))?;
    let e_t = centre(&mut tmpl);
    if e_t == 0.0 {
        return Ok(OffsetSample::new(0.0, 0.0, 0.0, false));
    }

    let radius = cfg.radius() as isize;
    let mut best: Option<(f64, isize, isize, f64)> = None;
    for dr in seed.0 - radius..=seed.0 + radius {
        for dc in seed.1 - radius..=seed.1 + radius {
            let Some(mut s) = amplitude_patch(slave, top + dr, left + dc, rows, cols) else {
                continue;
            };
            let e_s = centre(&mut s);
            let ncc = if e_s > 0.0 {
                tmpl.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>() / (e_t * e_s).sqrt()
            } else {
                0.0
            };
            if best.as_ref().is_none_or(|b| ncc > b.0) {
                best = Some((ncc, dr, dc, e_s));
            }
        }
    }
    let Some((ncc, dr, dc, e_s)) = best else {
        return Err(Error::OutOfRange(format!("no search position at {at:?} fits inside the slave image")));
    };
    if e_s == 0.0 {
        return Ok(OffsetSample::new(dc as f64, dr as f64, 0.0, false));
    }
    let (fr, fc, corr) = if cfg.oversampling > 1 {
        match Interpolator::new(slave, top + dr, left + dc, rows, cols) {
            Some(interp) => refine(&tmpl, e_t, &interp, cfg.oversampling),
            None => (0.0, 0.0, ncc),
        }
    } else {
        (0.0, 0.0, ncc)
    };
    let corr = corr.clamp(-1.0, 1.0);
    Ok(OffsetSample::new(
        dc as f64 + fc,
        dr as f64 + fr,
        corr,
        corr >= cfg.corr_threshold,
    ))
}

/// Band-limited evaluation of a slave window at fractional offsets, from the
/// spectrum of a surrounding complex region. The region is demodulated by
/// its own Doppler centroid so that the interpolation kernel is centred on
/// the occupied band.
struct Interpolator {
    rows: usize,
    cols: usize,
    /// Region size and the window's position inside it.
    n: (usize, usize),
    margin: (usize, usize),
    spectrum: Vec<Complex<f64>>,
}

impl Interpolator {
    fn new<T: Real>(img: &ComplexRaster<T>, top: isize, left: isize, rows: usize, cols: usize) -> Option<Self> {
        let (n_az, n_rg) = img.shape();
        if top < 0 || left < 0 {
            return None;
        }
        let (top, left) = (top as usize, left as usize);
        let fit = |start: usize, len: usize, total: usize| (len / 2).min(start).min(total.checked_sub(start + len)?).into();
        let m_r: Option<usize> = fit(top, rows, n_az);
        let m_c: Option<usize> = fit(left, cols, n_rg);
        let (m_r, m_c) = (m_r?, m_c?);
        let (n0, n1) = (rows + 2 * m_r, cols + 2 * m_c);
        let mut z = Vec::with_capacity(n0 * n1);
        for r in top - m_r..top - m_r + n0 {
            z.extend(img.row(r)[left - m_c..left - m_c + n1].iter().map(|v| Complex::new(v.re.as_f64(), v.im.as_f64())));
        }
        // centroid per axis from the lag-one autocorrelation
        let (mut acf_r, mut acf_c) = (Complex::<f64>::default(), Complex::<f64>::default());
        for r in 0..n0 {
            for c in 0..n1 {
                if r + 1 < n0 {
                    acf_r += z[(r + 1) * n1 + c] * z[r * n1 + c].conj();
                }
                if c + 1 < n1 {
                    acf_c += z[r * n1 + c + 1] * z[r * n1 + c].conj();
                }
            }
        }
        let (f_r, f_c) = (acf_r.arg(), acf_c.arg());
        for r in 0..n0 {
            for c in 0..n1 {
                z[r * n1 + c] *= Complex::from_polar(1.0, -(f_r * r as f64 + f_c * c as f64));
            }
        }
        let mut planner = FftPlanner::<f64>::new();
        let fft1 = planner.plan_fft_forward(n1);
        let fft0 = planner.plan_fft_forward(n0);
        for line in z.chunks_mut(n1) {
            fft1.process(line);
        }
        let mut col = vec![Complex::<f64>::default(); n0];
        for c in 0..n1 {
            for r in 0..n0 {
                col[r] = z[r * n1 + c];
            }
            fft0.process(&mut col);
            for r in 0..n0 {
                z[r * n1 + c] = col[r] / (n0 * n1) as f64;
            }
        }
        Some(Self {
            rows,
            cols,
            n: (n0, n1),
            margin: (m_r, m_c),
            spectrum: z,
        })
    }

    fn kernel(n: usize, len: usize, start: f64) -> Vec<Complex<f64>> {
        let mut out = Vec::with_capacity(len * n);
        for x in 0..len {
            for k in 0..n {
                let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                out.push(Complex::from_polar(1.0, std::f64::consts::TAU * kk * (x as f64 + start) / n as f64));
            }
        }
        out
    }

    /// Rows of the window shifted by `dr`, transformed back along azimuth
    /// only: `rows x n1`.
    fn shift_rows(&self, dr: f64) -> Vec<Complex<f64>> {
        let (n0, n1) = self.n;
        let e = Self::kernel(n0, self.rows, self.margin.0 as f64 + dr);
        let mut out = vec![Complex::<f64>::default(); self.rows * n1];
        for x in 0..self.rows {
            for k in 0..n0 {
                let w = e[x * n0 + k];
                let src = &self.spectrum[k * n1..(k + 1) * n1];
                for (o, s) in out[x * n1..(x + 1) * n1].iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        }
        out
    }

    /// Zero-mean amplitude of the window shifted by `(dr, dc)` and its energy.
    fn amplitude(&self, partial: &[Complex<f64>], dc: f64) -> (Vec<f64>, f64) {
        let n1 = self.n.1;
        let e = Self::kernel(n1, self.cols, self.margin.1 as f64 + dc);
        let mut amp = Vec::with_capacity(self.rows * self.cols);
        for x in 0..self.rows {
            let row = &partial[x * n1..(x + 1) * n1];
            for y in 0..self.cols {
                let ker = &e[y * n1..(y + 1) * n1];
                let v: Complex<f64> = row.iter().zip(ker).map(|(a, b)| a * b).sum();
                amp.push(v.norm());
            }
        }
        let energy = centre(&mut amp);
        (amp, energy)
    }
}

/// Normalised correlation of the template with the slave window moved by a
/// sub-pixel offset, maximised by a pattern search whose step halves from
/// half a pixel down to `1 / factor` inside the +/-1 px neighbourhood.
fn refine(tmpl: &[f64], e_t: f64, interp: &Interpolator, factor: usize) -> (f64, f64, f64) {
    let ncc = |partial: &[Complex<f64>], dc: f64| {
        let (s, e_s) = interp.amplitude(partial, dc);
        if e_s > 0.0 {
            tmpl.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>() / (e_t * e_s).sqrt()
        } else {
            0.0
        }
    };
    let last = 1.0 / factor as f64;
    let (mut br, mut bc) = (0.0f64, 0.0f64);
    let mut best = ncc(&interp.shift_rows(0.0), 0.0);
    let mut step = 0.5f64.max(last);
    loop {
        // move to the best neighbour until the centre wins
        for _ in 0..8 {
            let mut cand = (br, bc, best);
            for i in [-1.0, 0.0, 1.0] {
                let r = br + i * step;
                if r.abs() > 1.0 {
                    continue;
                }
                let partial = interp.shift_rows(r);
                for j in [-1.0, 0.0, 1.0] {
                    let c = bc + j * step;
                    if (i == 0.0 && j == 0.0) || c.abs() > 1.0 {
                        continue;
                    }
                    let v = ncc(&partial, c);
                    if v > cand.2 {
                        cand = (r, c, v);
                    }
                }
            }
            if cand.2 > best {
                (br, bc, best) = cand;
            } else {
                break;
            }
        }
        if step <= last {
            break;
        }
        step = (step / 2.0).max(last);
    }
    (br, bc, best)
}

/// Whole-image integer shift (row, col) of `slave` relative to `master`
/// from the circular cross-correlation of block-averaged amplitudes.
pub fn coarse_offset<T: Real>(master: &ComplexRaster<T>, slave: &ComplexRaster<T>, factor: usize) -> Result<(isize, isize)> {
    if master.shape() != slave.shape() {
        return Err(Error::InvalidInput("master and slave differ in shape".into()));
    }
    let factor = factor.max(1);
    let (n_az, n_rg) = master.shape();
    let (m_az, m_rg) = (n_az / factor, n_rg / factor);
    if m_az < 4 || m_rg < 4 {
        return Ok((0, 0));
    }
    let reduce = |img: &ComplexRaster<T>| -> Result<ComplexRaster<f64>> {
        let mut v = vec![0.0; m_az * m_rg];
        for r in 0..m_az * factor {
            for c in 0..m_rg * factor {
                v[(r / factor) * m_rg + c / factor] += img.get(r, c).norm().as_f64();
            }
        }
        centre(&mut v);
        ComplexRaster::new(m_az, m_rg, v.into_iter().map(|x| Complex::new(x, 0.0)).collect(), img.meta.clone())
    };
    let a = dft2(&reduce(master)?)?;
    let mut b = dft2(&reduce(slave)?)?;
    for (y, x) in b.data_mut().iter_mut().zip(a.data()) {
        *y *= x.conj();
    }
    let corr = idft2(&b)?;
    let lag = |k: usize, n: usize| if k <= n / 2 { k as isize } else { k as isize - n as isize };
    let mut best = (0isize, 0isize, f64::NEG_INFINITY);
    for r in 0..m_az {
        for c in 0..m_rg {
            let (lr, lc) = (lag(r, m_az), lag(c, m_rg));
            if lr.unsigned_abs() > m_az / 4 || lc.unsigned_abs() > m_rg / 4 {
                continue;
            }
            let v = corr.get(r, c).re;
            if v > best.2 {
                best = (lr, lc, v);
            }
        }
    }
    Ok((best.0 * factor as isize, best.1 * factor as isize))
}
