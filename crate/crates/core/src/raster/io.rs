//! MMSR binary raster files and their JSON metadata sidecars.
//!
//! Layout (little endian): `MMSR` magic, `u32` version = 1, `u64` n_az,
//! `u64` n_rg, then `n_az * n_rg` interleaved `(re, im)` pairs of `f32`.
//! The sidecar lives next to the raster as `<file>.json`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex;

use super::{AcquisitionMeta, ComplexRaster};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAGIC: &[u8; 4] = b"MMSR";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8;

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Serialize the samples of `img` in MMSR layout.
pub fn encode<T: Real>(img: &ComplexRaster<T>) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + img.data().len() * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(img.n_az() as u64).to_le_bytes());
    buf.extend_from_slice(&(img.n_rg() as u64).to_le_bytes());
    for z in img.data() {
        buf.extend_from_slice(&(z.re.as_f64() as f32).to_le_bytes());
        buf.extend_from_slice(&(z.im.as_f64() as f32).to_le_bytes());
    }
    buf
}

/// Parse MMSR bytes into a raster carrying `meta`.
pub fn decode<T: Real>(bytes: &[u8], meta: AcquisitionMeta, origin: &Path) -> Result<ComplexRaster<T>> {
    let bad = |detail: String| Error::Format {
        path: origin.to_path_buf(),
        detail,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("file too short for header ({} bytes)", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(bad("missing MMSR magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let n_az = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let n_rg = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let expected = n_az
        .checked_mul(n_rg)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| bad("dimensions overflow".into()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != expected {
        return Err(bad(format!(
            "expected {expected} payload bytes for {n_az}x{n_rg}, found {}",
            body.len()
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[0..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..8].try_into().unwrap());
            Complex::new(T::lit(re as f64), T::lit(im as f64))
        })
        .collect();
    ComplexRaster::new(n_az, n_rg, data, meta)
}

/// Write `img` to `path` plus its metadata sidecar.
pub fn write_raster<T: Real>(path: &Path, img: &ComplexRaster<T>) -> Result<()> {
    let bytes = encode(img);
    let mut f = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    f.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))?;
    write_meta(&sidecar_path(path), &img.meta)
}

pub fn write_meta(path: &Path, meta: &AcquisitionMeta) -> Result<()> {
    let json = serde_json::to_string_pretty(meta)?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_meta(path: &Path) -> Result<AcquisitionMeta> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let meta: AcquisitionMeta = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    meta.validate()?;
    Ok(meta)
}

/// Read a raster and its sidecar.
pub fn read_raster<T: Real>(path: &Path) -> Result<ComplexRaster<T>> {
    let meta = read_meta(&sidecar_path(path))?;
    let mut bytes = Vec::new();
    BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes, meta, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::test_support::{meta, random_raster};

    #[test]
    fn header_layout() {
        let img = random_raster(3, 5, 1);
        let b = encode(&img);
        assert_eq!(&b[0..4], b"MMSR");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(b[8..16].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(b[16..24].try_into().unwrap()), 5);
        assert_eq!(b.len(), 24 + 15 * 8);
        let re = f32::from_le_bytes(b[24..28].try_into().unwrap());
        assert_eq!(re, img.get(0, 0).re as f32);
        let im = f32::from_le_bytes(b[60..64].try_into().unwrap());
        assert_eq!(im, img.get(0, 4).im as f32);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.mmsr");
        let img = random_raster(6, 4, 2).cast::<f32>();
        write_raster(&path, &img).unwrap();
        assert!(sidecar_path(&path).exists());
        let back: ComplexRaster<f32> = read_raster(&path).unwrap();
        assert_eq!(back, img);
        let text = std::fs::read_to_string(sidecar_path(&path)).unwrap();
        for key in ["\"prf\"", "\"fs_rg\"", "\"wavelength\"", "\"v_p\"", "\"L\"", "\"incidence\"", "\"gamma\"", "\"t_start\"", "\"doppler_center\""] {
            assert!(text.contains(key), "{key} missing from sidecar");
        }
    }

    #[test]
    fn rejects_corrupt_files() {
        let p = Path::new("mem");
        assert!(decode::<f64>(b"MMS", meta(), p).is_err());
        let mut b = encode(&random_raster(2, 2, 3));
        b[0] = b'X';
        assert!(decode::<f64>(&b, meta(), p).is_err());
        let mut b = encode(&random_raster(2, 2, 3));
        b.pop();
        assert!(decode::<f64>(&b, meta(), p).is_err());
        let mut b = encode(&random_raster(2, 2, 3));
        b[4] = 2;
        assert!(decode::<f64>(&b, meta(), p).is_err());
    }
}
