//! File-level processing stages and the orchestrated run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::coreg::{track, CoregConfig};
use crate::error::{Error, Result};
use crate::focus::focus;
use crate::modal::{detect_anomalies, vibration_map, AnomalyReport, VibrationMap, DEFAULT_Z};
use crate::psinsar::{
    compare_gnss, kinematics, phase_model, select_ps, ComparisonReport, PhaseGeometry, SlcStack, StabilityMode,
    DAYS_PER_YEAR, DEFAULT_STABILITY,
};
use crate::raster::io::{read_raster, sidecar_path, write_raster};
use crate::raster::ComplexRaster;
use crate::report::tables::{
    anomaly_rows, ps_series, read_gnss, read_offsets, read_rows, vibration_rows, write_offsets, write_rows,
    KinematicsRow, PsRow,
};
use crate::report::{file_digest, sha256_hex, Grid, RunManifest, Scale, StageRecord};
use crate::scene::SceneDefinition;
use crate::subaperture::{decompose, make_plan, FrequencyPlan, SubApertureStack, DEFAULT_BANDS, DEFAULT_OVERLAP};

pub const PLAN_FILE: &str = "plan.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn band_file(k: usize) -> String {
    format!("band_{k:03}.mmsr")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn simulate_file(scene: &Path, out: &Path, rows: usize, cols: usize, seed: u64) -> Result<()> {
    let text = std::fs::read_to_string(scene).map_err(|e| Error::io(scene, e))?;
    let def = SceneDefinition::from_json(&text)?;
    let raw = def.simulate_raw::<f64>(rows, cols, seed)?;
    write_raster(out, &raw)
}

pub fn focus_file(input: &Path, out: &Path) -> Result<()> {
    let raw = read_raster::<f64>(input)?;
    write_raster(out, &focus(&raw)?)
}

/// Focused sub-aperture images named by plan band index, plus the plan.
/// Returns the written files.
pub fn subap_files(raw: &Path, n_bands: usize, overlap: f64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let raw = read_raster::<f64>(raw)?;
    let plan = make_plan(&raw.meta, raw.shape(), n_bands, overlap)?;
    let stack = decompose(&raw, &plan)?;
    create_dir(out_dir)?;
    let mut files = Vec::new();
    for (img, &band) in stack.images.iter().zip(&stack.band_index) {
        let p = out_dir.join(band_file(band));
        write_raster(&p, img)?;
        files.push(p);
    }
    let p = out_dir.join(PLAN_FILE);
    write_json(&p, &plan)?;
    files.push(p);
    Ok(files)
}

pub fn stack_files(dir: &Path, plan: &FrequencyPlan) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = (0..plan.n_bands).map(|k| dir.join(band_file(k))).collect();
    v.push(dir.join(PLAN_FILE));
    v
}

pub fn read_stack(dir: &Path) -> Result<SubApertureStack<f64>> {
    let plan: FrequencyPlan = read_json(&dir.join(PLAN_FILE))?;
    let images = plan
        .time_order()
        .into_iter()
        .map(|k| {
            let path = dir.join(band_file(k));
            let img = read_raster::<f64>(&path)?;
            // sub-aperture images carry their band centre as Doppler centroid
            if (img.meta.doppler_center - plan.centers[k]).abs() > 1e-6 * plan.prf {
                return Err(Error::Format {
                    path,
                    detail: format!("Doppler centroid {} differs from band centre {}", img.meta.doppler_center, plan.centers[k]),
                });
            }
            Ok(img)
        })
        .collect::<Result<Vec<_>>>()?;
    SubApertureStack::new(images, plan)
}

pub fn track_files(stack_dir: &Path, cfg: &CoregConfig, out: &Path) -> Result<()> {
    let stack = read_stack(stack_dir)?;
    let t = track(&stack, cfg)?;
    write_offsets(out, &t.series)
}

pub struct ModalOutput {
    pub map: VibrationMap,
    pub report: AnomalyReport,
}

/// Vibration map and anomalies from an offsets table; optionally renders
/// the energy heatmap on a `shape` grid (defaults to the tracked extent).
pub fn modal_files(
    offsets: &Path,
    vibmap: &Path,
    anomalies: &Path,
    z: f64,
    heatmap: Option<(&Path, Option<(usize, usize)>, Scale)>,
) -> Result<ModalOutput> {
    let series = read_offsets(offsets)?;
    let map = vibration_map(&series)?;
    let report = detect_anomalies(&map, z)?;
    write_rows(vibmap, &vibration_rows(&map))?;
    write_rows(anomalies, &anomaly_rows(&report))?;
    if let Some((path, shape, scale)) = heatmap {
        let pixels: Vec<(usize, usize)> = map.points.iter().map(|p| p.pixel).collect();
        let (rows, cols) = shape.unwrap_or_else(|| {
            pixels
                .iter()
                .fold((1, 1), |(r, c), &(pr, pc)| (r.max(pr + 1), c.max(pc + 1)))
        });
        let grid = Grid::scatter(rows, cols, &pixels, &map.energies())?;
        crate::report::render_heatmap(&grid, path, scale)?;
    }
    Ok(ModalOutput { map, report })
}

/// Linear lat/lon annotation of image pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoAnnotation {
    pub lat0: f64,
    pub lon0: f64,
    pub dlat_per_row: f64,
    pub dlon_per_col: f64,
}

impl GeoAnnotation {
    pub fn locate(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.lat0 + row as f64 * self.dlat_per_row,
            self.lon0 + col as f64 * self.dlon_per_col,
        )
    }
}

/// Description of a co-registered image stack on disk. Relative image
/// paths are resolved against the list file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackList {
    pub images: Vec<PathBuf>,
    pub acquisition_times_days: Vec<f64>,
    #[serde(default)]
    pub master_index: Option<usize>,
    pub geometry: PhaseGeometry,
    #[serde(default)]
    pub geo: Option<GeoAnnotation>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn parent_dir(p: &Path) -> PathBuf {
    p.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub fn atmo_file(k: usize) -> String {
    format!("atmo_{k:03}.mmsr")
}

/// Image and atmosphere files a stack list refers to.
pub fn stack_list_inputs(list_path: &Path, atmo_dir: Option<&Path>) -> Result<Vec<PathBuf>> {
    let list: StackList = read_json(list_path)?;
    let base = parent_dir(list_path);
    let mut v = vec![list_path.to_path_buf()];
    v.extend(list.images.iter().map(|p| resolve(&base, p)));
    if let Some(dir) = atmo_dir {
        v.extend((0..list.images.len()).map(|k| dir.join(atmo_file(k))));
    }
    Ok(v)
}

/// Persistent-scatterer selection and displacement series, written as the
/// long-format `ps.csv`. Atmospheric phase is read as the argument of
/// `atmo_NNN.mmsr` in `atmo_dir`, one per image.
pub fn psinsar_files(list_path: &Path, atmo_dir: Option<&Path>, threshold: f64, mode: StabilityMode, out: &Path) -> Result<usize> {
    let list: StackList = read_json(list_path)?;
    let base = parent_dir(list_path);
    let images = list
        .images
        .iter()
        .map(|p| read_raster::<f64>(&resolve(&base, p)))
        .collect::<Result<Vec<_>>>()?;
    let stack = SlcStack::new(images, list.acquisition_times_days.clone(), list.master_index)?;
    let atmo = match atmo_dir {
        Some(dir) => Some(
            (0..stack.len())
                .map(|k| {
                    let r: ComplexRaster<f64> = read_raster(&dir.join(atmo_file(k)))?;
                    if r.shape() != stack.shape() {
                        return Err(Error::Config(format!("{} does not match the stack", atmo_file(k))));
                    }
                    Ok(r.data().iter().map(|z: &Complex<f64>| z.arg()).collect::<Vec<f64>>())
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let set = select_ps(&stack, threshold, mode)?;
    let phases = phase_model(&stack, &set.pixels, &list.geometry, atmo.as_deref())?;
    let mut rows = Vec::new();
    for (id, (ph, fit)) in phases.iter().zip(&set.fits).enumerate() {
        let geo = list.geo.map(|g| g.locate(ph.pixel.0, ph.pixel.1));
        for (k, (&t, &d)) in stack.acquisition_times.iter().zip(&ph.displacement_mm).enumerate() {
            rows.push(PsRow {
                ps_id: id,
                row: ph.pixel.0,
                col: ph.pixel.1,
                lat_deg: geo.map(|g| g.0),
                lon_deg: geo.map(|g| g.1),
                d_a: fit.d_a,
                reliable: ph.reliable,
                epoch_index: k,
                time_days: t,
                displacement_mm: d,
            });
        }
    }
    write_rows(out, &rows)?;
    Ok(set.len())
}

/// Kinematic summary per scatterer. Scatterers flagged unreliable are
/// skipped. Returns the number skipped.
pub fn kinematics_files(ps_csv: &Path, out: &Path) -> Result<usize> {
    let rows: Vec<PsRow> = read_rows(ps_csv)?;
    let mut out_rows = Vec::new();
    let mut skipped = 0;
    for s in ps_series(&rows) {
        if !s.reliable {
            skipped += 1;
            continue;
        }
        let years: Vec<f64> = s.times_days.iter().map(|t| t / DAYS_PER_YEAR).collect();
        let k = kinematics(&s.displacement_mm, &years)?;
        out_rows.push(KinematicsRow::new(&s, &k));
    }
    write_rows(out, &out_rows)?;
    Ok(skipped)
}

pub fn compare_gnss_files(kin_csv: &Path, gnss_csv: &Path, max_dist: f64, out: &Path) -> Result<ComparisonReport> {
    let rows: Vec<KinematicsRow> = read_rows(kin_csv)?;
    let ps: Vec<_> = rows.iter().filter_map(KinematicsRow::velocity).collect();
    if ps.is_empty() && !rows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} has no scatterer coordinates",
            kin_csv.display()
        )));
    }
    let gnss = read_gnss(gnss_csv)?;
    let report = compare_gnss(&ps, &gnss, max_dist)?;
    write_json(out, &report)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubapertureParams {
    pub bands: usize,
    pub overlap: f64,
}

impl Default for SubapertureParams {
    fn default() -> Self {
        Self {
            bands: DEFAULT_BANDS,
            overlap: DEFAULT_OVERLAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModalParams {
    pub z_threshold: f64,
    pub heatmap_scale: Scale,
}

impl Default for ModalParams {
    fn default() -> Self {
        Self {
            z_threshold: DEFAULT_Z,
            heatmap_scale: Scale::Quantile,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsinsarParams {
    pub stack: PathBuf,
    #[serde(default)]
    pub atmo_dir: Option<PathBuf>,
    #[serde(default = "default_stability")]
    pub threshold: f64,
    #[serde(default)]
    pub mode: StabilityMode,
    #[serde(default)]
    pub gnss: Option<PathBuf>,
    #[serde(default = "default_max_dist")]
    pub max_dist: f64,
}

fn default_stability() -> f64 {
    DEFAULT_STABILITY
}

fn default_max_dist() -> f64 {
    100.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub out_dir: PathBuf,
    /// Scene to simulate; when absent `raw` must name existing raw data.
    #[serde(default)]
    pub scene: Option<PathBuf>,
    #[serde(default)]
    pub raw: Option<PathBuf>,
    #[serde(default = "default_rows")]
    pub rows: usize,
    #[serde(default = "default_cols")]
    pub cols: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub subaperture: SubapertureParams,
    #[serde(default)]
    pub coreg: CoregConfig,
    #[serde(default)]
    pub modal: ModalParams,
    #[serde(default)]
    pub psinsar: Option<PsinsarParams>,
}

fn default_rows() -> usize {
    1024
}

fn default_cols() -> usize {
    64
}

impl PipelineConfig {
    /// Read a config file, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = read_json(path)?;
        let base = parent_dir(path);
        cfg.out_dir = resolve(&base, &cfg.out_dir);
        for p in [&mut cfg.scene, &mut cfg.raw].into_iter().flatten() {
            *p = resolve(&base, p);
        }
        if let Some(ps) = cfg.psinsar.as_mut() {
            ps.stack = resolve(&base, &ps.stack);
            for p in [&mut ps.atmo_dir, &mut ps.gnss].into_iter().flatten() {
                *p = resolve(&base, p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scene.is_none() && self.raw.is_none() {
            return Err(Error::Config("config needs either `scene` or `raw`".into()));
        }
        self.coreg.validate()?;
        if !(self.modal.z_threshold > 0.0) {
            return Err(Error::Config("modal z_threshold must be positive".into()));
        }
        Ok(())
    }
}

struct Runner {
    out_dir: PathBuf,
    manifest_path: PathBuf,
    manifest: RunManifest,
    previous: Option<RunManifest>,
    skipped: Vec<String>,
}

impl Runner {
    fn name(&self, p: &Path) -> String {
        p.strip_prefix(&self.out_dir)
            .map(|r| r.to_string_lossy().into_owned())
            .unwrap_or_else(|_| p.to_string_lossy().into_owned())
    }

    fn digests(&self, files: &[PathBuf]) -> Result<BTreeMap<String, String>> {
        files.iter().map(|p| Ok((self.name(p), file_digest(p)?))).collect()
    }

    /// Runs `work` unless the previous manifest holds an identical record
    /// whose outputs are still on disk unchanged.
    fn stage(
        &mut self,
        name: &str,
        params: &impl Serialize,
        inputs: &[PathBuf],
        outputs: impl Fn() -> Result<Vec<PathBuf>>,
        work: impl FnOnce() -> Result<()>,
    ) -> Result<()> {
        let wrap = |e: Error| Error::Stage {
            stage: name.to_string(),
            source: Box::new(e),
        };
        let input_digests = self.digests(inputs).map_err(wrap)?;
        let key = sha256_hex(&serde_json::to_vec(&(params, &input_digests)).map_err(|e| wrap(e.into()))?);
        if let Some(prev) = self.previous.as_ref().and_then(|m| m.stages.get(name)) {
            if prev.key == key {
                let current = outputs().and_then(|o| self.digests(&o)).ok();
                if current.as_ref() == Some(&prev.outputs) {
                    self.manifest.stages.insert(name.to_string(), prev.clone());
                    self.skipped.push(name.to_string());
                    return Ok(());
                }
            }
        }
        let start = Instant::now();
        work().map_err(wrap)?;
        let out = outputs().and_then(|o| self.digests(&o)).map_err(wrap)?;
        self.manifest.stages.insert(
            name.to_string(),
            StageRecord {
                key,
                inputs: input_digests,
                outputs: out,
                elapsed_s: start.elapsed().as_secs_f64(),
            },
        );
        self.manifest.save(&self.manifest_path).map_err(wrap)
    }
}

/// Outcome of [`run_pipeline`].
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub manifest: RunManifest,
    /// Stages whose outputs were reused.
    pub skipped: Vec<String>,
}

/// simulate (optional), focus, subap, track and modal, then the optional
/// persistent-scatterer branch. Each stage is skipped when its parameters,
/// inputs and outputs match the manifest left by a previous run.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let out = cfg.out_dir.clone();
    create_dir(&out)?;
    let manifest_path = out.join(MANIFEST_FILE);
    let config_hash = sha256_hex(&serde_json::to_vec(cfg)?);
    let mut run = Runner {
        out_dir: out.clone(),
        previous: RunManifest::load(&manifest_path),
        manifest_path,
        manifest: RunManifest::new(config_hash),
        skipped: Vec::new(),
    };

    let raw = match (&cfg.scene, &cfg.raw) {
        (Some(scene), _) => {
            let raw = out.join("raw.mmsr");
            let files = vec![raw.clone(), sidecar_path(&raw)];
            run.stage(
                "simulate",
                &(cfg.rows, cfg.cols, cfg.seed),
                std::slice::from_ref(scene),
                || Ok(files.clone()),
                || simulate_file(scene, &raw, cfg.rows, cfg.cols, cfg.seed),
            )?;
            raw
        }
        (None, Some(raw)) => raw.clone(),
        (None, None) => unreachable!("validated"),
    };
    let raw_inputs = vec![raw.clone(), sidecar_path(&raw)];

    let slc = out.join("slc.mmsr");
    run.stage("focus", &(), &raw_inputs, || Ok(vec![slc.clone(), sidecar_path(&slc)]), || focus_file(&raw, &slc))?;

    let stack_dir = out.join("stack");
    let listing = |dir: &Path| -> Result<Vec<PathBuf>> {
        let plan: FrequencyPlan = read_json(&dir.join(PLAN_FILE))?;
        Ok(stack_files(dir, &plan))
    };
    let sp = &cfg.subaperture;
    run.stage("subap", sp, &raw_inputs, || listing(&stack_dir), || {
        subap_files(&raw, sp.bands, sp.overlap, &stack_dir).map(|_| ())
    })?;

    let offsets = out.join("offsets.csv");
    let stack_inputs = listing(&stack_dir).map_err(|e| Error::Stage {
        stage: "track".into(),
        source: Box::new(e),
    })?;
    run.stage("track", &cfg.coreg, &stack_inputs, || Ok(vec![offsets.clone()]), || {
        track_files(&stack_dir, &cfg.coreg, &offsets)
    })?;

    let vibmap = out.join("vibmap.csv");
    let anomalies = out.join("anomalies.csv");
    let heat = out.join("energy.pgm");
    let modal_outputs = vec![vibmap.clone(), anomalies.clone(), heat.clone()];
    run.stage("modal", &cfg.modal, std::slice::from_ref(&offsets), || Ok(modal_outputs.clone()), || {
        modal_files(
            &offsets,
            &vibmap,
            &anomalies,
            cfg.modal.z_threshold,
            Some((&heat, Some((cfg.rows, cfg.cols)), cfg.modal.heatmap_scale)),
        )
        .map(|_| ())
    })?;

    if let Some(ps) = &cfg.psinsar {
        let ps_csv = out.join("ps.csv");
        let inputs = stack_list_inputs(&ps.stack, ps.atmo_dir.as_deref()).map_err(|e| Error::Stage {
            stage: "psinsar".into(),
            source: Box::new(e),
        })?;
        run.stage("psinsar", &(ps.threshold, ps.mode), &inputs, || Ok(vec![ps_csv.clone()]), || {
            psinsar_files(&ps.stack, ps.atmo_dir.as_deref(), ps.threshold, ps.mode, &ps_csv).map(|_| ())
        })?;
        let kin = out.join("kin.csv");
        run.stage("kinematics", &(), std::slice::from_ref(&ps_csv), || Ok(vec![kin.clone()]), || {
            kinematics_files(&ps_csv, &kin).map(|_| ())
        })?;
        if let Some(gnss) = &ps.gnss {
            let report = out.join("gnss_report.json");
            run.stage("compare-gnss", &ps.max_dist, &[kin.clone(), gnss.clone()], || Ok(vec![report.clone()]), || {
                compare_gnss_files(&kin, gnss, ps.max_dist, &report).map(|_| ())
            })?;
        }
    }
    run.manifest.save(&run.manifest_path)?;
    Ok(RunSummary {
        manifest: run.manifest,
        skipped: run.skipped,
    })
}
