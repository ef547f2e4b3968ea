//! CSV tables exchanged between processing stages. Every table has a
//! header row; optional values are written as empty fields.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::coreg::{OffsetSample, OffsetSeries};
use crate::error::{Error, Result};
use crate::modal::{AnomalyReport, VibrationMap};
use crate::psinsar::{GnssRecord, Kinematics, PsVelocity};

pub fn write_rows<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Write rows to an in-memory CSV document.
pub fn to_csv_bytes<R: Serialize>(rows: &[R]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn read_rows<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    rd.deserialize().map(|r| r.map_err(|e| csv_error(path, e))).collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Format {
            path: path.to_path_buf(),
            detail: format!("{other:?}"),
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetRow {
    pub point_id: usize,
    pub row: usize,
    pub col: usize,
    pub band_index: usize,
    pub epoch_s: f64,
    pub d_rg_px: f64,
    pub d_az_px: f64,
    pub peak_corr: f64,
    pub valid: bool,
}

pub fn offset_rows(series: &[OffsetSeries]) -> Vec<OffsetRow> {
    series
        .iter()
        .flat_map(|s| {
            s.samples.iter().zip(&s.epochs).zip(&s.bands).map(move |((x, &t), &b)| OffsetRow {
                point_id: s.point_id,
                row: s.pixel.0,
                col: s.pixel.1,
                band_index: b,
                epoch_s: t,
                d_rg_px: x.d_rg,
                d_az_px: x.d_az,
                peak_corr: x.peak_corr,
                valid: x.valid,
            })
        })
        .collect()
}

/// Regroup offset rows into per-point series, keeping first-seen point order.
pub fn series_from_rows(rows: &[OffsetRow]) -> Result<Vec<OffsetSeries>> {
    let mut out: Vec<OffsetSeries> = Vec::new();
    for r in rows {
        let sample = OffsetSample::new(r.d_rg_px, r.d_az_px, r.peak_corr, r.valid);
        match out.iter_mut().find(|s| s.point_id == r.point_id) {
            Some(s) => {
                if s.pixel != (r.row, r.col) {
                    return Err(Error::InvalidInput(format!("point {} changes pixel", r.point_id)));
                }
                s.samples.push(sample);
                s.epochs.push(r.epoch_s);
                s.bands.push(r.band_index);
            }
            None => out.push(OffsetSeries {
                point_id: r.point_id,
                pixel: (r.row, r.col),
                samples: vec![sample],
                epochs: vec![r.epoch_s],
                bands: vec![r.band_index],
            }),
        }
    }
    Ok(out)
}

pub fn write_offsets(path: &Path, series: &[OffsetSeries]) -> Result<()> {
    write_rows(path, &offset_rows(series))
}

pub fn read_offsets(path: &Path) -> Result<Vec<OffsetSeries>> {
    series_from_rows(&read_rows(path)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VibrationRow {
    pub point_id: usize,
    pub row: usize,
    pub col: usize,
    pub energy: f64,
    pub dominant_freq_hz: Option<f64>,
}

pub fn vibration_rows(map: &VibrationMap) -> Vec<VibrationRow> {
    map.points
        .iter()
        .map(|p| VibrationRow {
            point_id: p.point_id,
            row: p.pixel.0,
            col: p.pixel.1,
            energy: p.energy,
            dominant_freq_hz: p.dominant_freq,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalyRow {
    pub point_id: usize,
    pub row: usize,
    pub col: usize,
    pub energy: f64,
    pub z_score: f64,
    pub dominant_freq_hz: Option<f64>,
}

pub fn anomaly_rows(report: &AnomalyReport) -> Vec<AnomalyRow> {
    report
        .anomalies
        .iter()
        .map(|a| AnomalyRow {
            point_id: a.point_id,
            row: a.pixel.0,
            col: a.pixel.1,
            energy: a.energy,
            z_score: a.z_score,
            dominant_freq_hz: a.dominant_freq,
        })
        .collect()
}

/// One epoch of one persistent scatterer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsRow {
    pub ps_id: usize,
    pub row: usize,
    pub col: usize,
    pub lat_deg: Option<f64>,
    pub lon_deg: Option<f64>,
    pub d_a: f64,
    pub reliable: bool,
    pub epoch_index: usize,
    pub time_days: f64,
    pub displacement_mm: f64,
}

/// Displacement series of one scatterer read back from `ps.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct PsSeries {
    pub ps_id: usize,
    pub pixel: (usize, usize),
    pub lat_deg: Option<f64>,
    pub lon_deg: Option<f64>,
    pub reliable: bool,
    pub times_days: Vec<f64>,
    pub displacement_mm: Vec<f64>,
}

pub fn ps_series(rows: &[PsRow]) -> Vec<PsSeries> {
    let mut out: Vec<PsSeries> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|s| s.ps_id == r.ps_id) {
            Some(s) => {
                s.times_days.push(r.time_days);
                s.displacement_mm.push(r.displacement_mm);
            }
            None => out.push(PsSeries {
                ps_id: r.ps_id,
                pixel: (r.row, r.col),
                lat_deg: r.lat_deg,
                lon_deg: r.lon_deg,
                reliable: r.reliable,
                times_days: vec![r.time_days],
                displacement_mm: vec![r.displacement_mm],
            }),
        }
    }
    out
}

/// Kinematic summary of one scatterer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinematicsRow {
    pub ps_id: usize,
    pub row: usize,
    pub col: usize,
    pub lat_deg: Option<f64>,
    pub lon_deg: Option<f64>,
    pub mean_velocity_mm_yr: f64,
    pub mean_acceleration_mm_yr2: f64,
    pub final_displacement_mm: f64,
    pub max_abs_jerk_mm_yr3: f64,
}

impl KinematicsRow {
    pub fn new(s: &PsSeries, k: &Kinematics) -> Self {
        Self {
            ps_id: s.ps_id,
            row: s.pixel.0,
            col: s.pixel.1,
            lat_deg: s.lat_deg,
            lon_deg: s.lon_deg,
            mean_velocity_mm_yr: k.mean_velocity,
            mean_acceleration_mm_yr2: k.mean_acceleration,
            final_displacement_mm: k.displacement.last().copied().unwrap_or(0.0),
            max_abs_jerk_mm_yr3: k.jerk.iter().fold(0.0, |m, j| m.max(j.abs())),
        }
    }

    /// Velocity record for GNSS comparison; needs coordinates.
    pub fn velocity(&self) -> Option<PsVelocity> {
        Some(PsVelocity {
            id: self.ps_id,
            lat_deg: self.lat_deg?,
            lon_deg: self.lon_deg?,
            vel_mm_yr: self.mean_velocity_mm_yr,
        })
    }
}

/// Grid from a table with `row` and `col` columns and a numeric `column`.
/// Without `shape` the grid spans the largest pixel present.
pub fn read_value_grid(path: &Path, column: &str, shape: Option<(usize, usize)>) -> Result<super::Grid> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = rd.headers().map_err(|e| csv_error(path, e))?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            detail: format!("no `{name}` column"),
        })
    };
    let (ir, ic, iv) = (find("row")?, find("col")?, find(column)?);
    let bad = |detail: String| Error::Format {
        path: path.to_path_buf(),
        detail,
    };
    let mut pixels = Vec::new();
    let mut values = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let parse = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
        let r: usize = parse(ir).parse().map_err(|_| bad(format!("bad row `{}`", parse(ir))))?;
        let c: usize = parse(ic).parse().map_err(|_| bad(format!("bad col `{}`", parse(ic))))?;
        let v = parse(iv);
        let v: f64 = if v.is_empty() { f64::NAN } else { v.parse().map_err(|_| bad(format!("bad value `{v}`")))? };
        pixels.push((r, c));
        values.push(v);
    }
    let (rows, cols) = shape.unwrap_or_else(|| pixels.iter().fold((1, 1), |(r, c), &(pr, pc)| (r.max(pr + 1), c.max(pc + 1))));
    super::Grid::scatter(rows, cols, &pixels, &values)
}

pub fn read_gnss(path: &Path) -> Result<Vec<GnssRecord>> {
    read_rows(path)
}
