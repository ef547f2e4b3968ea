//! 16-bit portable graymap rendering of scalar maps.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_LEVEL: u16 = u16::MAX;
const MID_LEVEL: u16 = 32768;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    /// Maps the 1st to 99th percentile onto the full range.
    Quantile,
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Scale::Linear),
            "quantile" => Ok(Scale::Quantile),
            _ => Err(Error::InvalidInput(format!("unknown scale `{s}`"))),
        }
    }
}

/// Row-major grid of values; NaN marks empty cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub n_rows: usize,
    pub n_cols: usize,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 || values.len() != n_rows * n_cols {
            return Err(Error::Render(format!(
                "grid {n_rows}x{n_cols} with {} values",
                values.len()
            )));
        }
        Ok(Self { n_rows, n_cols, values })
    }

    /// Grid of NaN with `values` placed at `pixels`.
    pub fn scatter(n_rows: usize, n_cols: usize, pixels: &[(usize, usize)], values: &[f64]) -> Result<Self> {
        let mut g = Self::new(n_rows, n_cols, vec![f64::NAN; n_rows * n_cols])?;
        for (&(r, c), &v) in pixels.iter().zip(values) {
            if r >= n_rows || c >= n_cols {
                return Err(Error::OutOfRange(format!("pixel ({r}, {c}) outside {n_rows}x{n_cols}")));
            }
            g.values[r * n_cols + c] = v;
        }
        Ok(g)
    }
}

/// Linear-interpolated percentile of sorted data, `q` in `[0, 1]`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (pos - i as f64) * (sorted[j] - sorted[i])
}

/// Gray levels for a grid; NaN cells are black.
pub fn levels(grid: &Grid, scale: Scale) -> Result<Vec<u16>> {
    let mut finite: Vec<f64> = grid.values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::Render("grid has no finite values".into()));
    }
    finite.sort_by(f64::total_cmp);
    let (lo, hi) = match scale {
        Scale::Linear => (finite[0], finite[finite.len() - 1]),
        Scale::Quantile => (percentile(&finite, 0.01), percentile(&finite, 0.99)),
    };
    let max = MAX_LEVEL as f64;
    Ok(grid
        .values
        .iter()
        .map(|&v| {
            if !v.is_finite() {
                0
            } else if hi > lo {
                ((v - lo) / (hi - lo) * max).round().clamp(0.0, max) as u16
            } else if v > hi {
                MAX_LEVEL
            } else if v < lo {
                0
            } else {
                MID_LEVEL
            }
        })
        .collect())
}

/// Binary (P5) graymap bytes with maxval 65535, samples big endian.
pub fn encode_pgm(grid: &Grid, scale: Scale) -> Result<Vec<u8>> {
    let lv = levels(grid, scale)?;
    let mut out = format!("P5\n{} {}\n{}\n", grid.n_cols, grid.n_rows, MAX_LEVEL).into_bytes();
    out.reserve(lv.len() * 2);
    for l in lv {
        out.extend_from_slice(&l.to_be_bytes());
    }
    Ok(out)
}

pub fn render_heatmap(grid: &Grid, path: &Path, scale: Scale) -> Result<()> {
    let bytes = encode_pgm(grid, scale)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Gray levels of a graymap written by [`encode_pgm`]: `(rows, cols, levels)`.
pub fn decode_pgm(bytes: &[u8], origin: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let bad = |detail: &str| Error::Format {
        path: origin.to_path_buf(),
        detail: detail.to_string(),
    };
    // header: magic, width, height, maxval, each followed by one whitespace byte
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() || start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
        pos += 1;
    }
    if fields[0] != "P5" {
        return Err(bad("not a binary graymap"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (cols, rows, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != MAX_LEVEL as usize {
        return Err(bad("expected 16-bit samples"));
    }
    let body = &bytes[pos..];
    if body.len() != rows * cols * 2 {
        return Err(bad("sample count does not match the header"));
    }
    let levels = body.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect();
    Ok((rows, cols, levels))
}

pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graymap_round_trip() {
        let g = Grid::new(3, 5, (0..15).map(f64::from).collect()).unwrap();
        let bytes = encode_pgm(&g, Scale::Linear).unwrap();
        let (rows, cols, lv) = decode_pgm(&bytes, Path::new("mem")).unwrap();
        assert_eq!((rows, cols), (3, 5));
        assert_eq!(lv, levels(&g, Scale::Linear).unwrap());
        assert!(decode_pgm(&bytes[..bytes.len() - 1], Path::new("mem")).is_err());
        assert!(decode_pgm(b"P2\n1 1\n65535\n0", Path::new("mem")).is_err());
    }

    #[test]
    fn constant_grid_is_mid_gray() {
        let g = Grid::new(3, 4, vec![2.5; 12]).unwrap();
        assert!(levels(&g, Scale::Linear).unwrap().iter().all(|&l| l == MID_LEVEL));
    }

    #[test]
    fn hot_pixel_saturates() {
        let mut v = vec![1.0; 400];
        v[123] = 1e6;
        let g = Grid::new(20, 20, v).unwrap();
        let lv = levels(&g, Scale::Quantile).unwrap();
        assert_eq!(lv[123], MAX_LEVEL);
        assert!(lv.iter().enumerate().all(|(i, &l)| i == 123 || l < MAX_LEVEL));
    }

    #[test]
    fn linear_spans_range() {
        let g = Grid::new(1, 3, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(levels(&g, Scale::Linear).unwrap(), vec![0, 32768, MAX_LEVEL]);
    }

    #[test]
    fn all_nan_fails() {
        let g = Grid::new(2, 2, vec![f64::NAN; 4]).unwrap();
        assert!(matches!(encode_pgm(&g, Scale::Linear), Err(Error::Render(_))));
    }

    #[test]
    fn header_and_size() {
        let g = Grid::scatter(2, 3, &[(1, 2)], &[5.0]).unwrap();
        let b = encode_pgm(&g, Scale::Linear).unwrap();
        let header = b"P5\n3 2\n65535\n";
        assert_eq!(&b[..header.len()], header);
        assert_eq!(b.len(), header.len() + 12);
    }
}
