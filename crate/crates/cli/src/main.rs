use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mmsar::coreg::CoregConfig;
use mmsar::pipeline::{self, PipelineConfig};
use mmsar::psinsar::StabilityMode;
use mmsar::raster::io::read_raster;
use mmsar::report::tables::read_value_grid;
use mmsar::report::{render_heatmap, Grid, Scale};
use mmsar::{Error, Result};

#[derive(Parser)]
#[command(name = "mmsar", version, about = "SAR micro-motion and persistent-scatterer processing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Linear,
    Quantile,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Linear => Scale::Linear,
            ScaleArg::Quantile => Scale::Quantile,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Dispersion,
    InverseStability,
}

impl From<ModeArg> for StabilityMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Dispersion => StabilityMode::Dispersion,
            ModeArg::InverseStability => StabilityMode::InverseStability,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate raw echoes of a scene file.
    Simulate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1024)]
        rows: usize,
        #[arg(long, default_value_t = 64)]
        cols: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Focus raw data into a single-look-complex image.
    Focus {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split raw data into focused Doppler sub-aperture images.
    Subap {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 16)]
        bands: usize,
        #[arg(long, default_value_t = 0.5)]
        overlap: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Track sub-pixel offsets through a sub-aperture stack.
    Track {
        #[arg(long)]
        stack: PathBuf,
        /// Tracking parameters (JSON); defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Vibration energy map and anomalies from an offsets table.
    Modal {
        #[arg(long)]
        offsets: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        anomalies: PathBuf,
        #[arg(long, default_value_t = 3.0)]
        z: f64,
        /// Also render the energy map as a graymap.
        #[arg(long)]
        heatmap: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ScaleArg::Quantile)]
        scale: ScaleArg,
    },
    /// Select persistent scatterers and estimate their displacement series.
    Psinsar {
        #[arg(long)]
        stack: PathBuf,
        #[arg(long)]
        atmo: Option<PathBuf>,
        #[arg(long, default_value_t = 0.8)]
        da: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::InverseStability)]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Velocity, acceleration and jerk of displacement series.
    Kinematics {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare scatterer velocities with GNSS stations.
    CompareGnss {
        #[arg(long)]
        ps: PathBuf,
        #[arg(long)]
        gnss: PathBuf,
        #[arg(long, default_value_t = 100.0)]
        maxdist: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the whole chain from a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render a raster amplitude or a CSV column as a 16-bit graymap.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// CSV column holding the values.
        #[arg(long, default_value = "energy")]
        value: String,
        #[arg(long, value_enum, default_value_t = ScaleArg::Linear)]
        scale: ScaleArg,
        /// Grid size as ROWS COLS (CSV input only).
        #[arg(long, num_args = 2, value_names = ["ROWS", "COLS"])]
        shape: Option<Vec<usize>>,
    },
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { scene, out, rows, cols, seed } => pipeline::simulate_file(&scene, &out, rows, cols, seed),
        Command::Focus { input, out } => pipeline::focus_file(&input, &out),
        Command::Subap { input, bands, overlap, out } => {
            let files = pipeline::subap_files(&input, bands, overlap, &out)?;
            println!("wrote {} files to {}", files.len(), out.display());
            Ok(())
        }
        Command::Track { stack, config, out } => {
            let cfg = match config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| Error::Io { path: p.clone(), source: e })?;
                    serde_json::from_str::<CoregConfig>(&text).map_err(|e| Error::Format { path: p, detail: e.to_string() })?
                }
                None => CoregConfig::default(),
            };
            pipeline::track_files(&stack, &cfg, &out)
        }
        Command::Modal { offsets, out, anomalies, z, heatmap, scale } => {
            let r = pipeline::modal_files(&offsets, &out, &anomalies, z, heatmap.as_deref().map(|p| (p, None, scale.into())))?;
            println!("{} points, {} anomalies", r.map.points.len(), r.report.anomalies.len());
            Ok(())
        }
        Command::Psinsar { stack, atmo, da, mode, out } => {
            let n = pipeline::psinsar_files(&stack, atmo.as_deref(), da, mode.into(), &out)?;
            println!("{n} persistent scatterers");
            Ok(())
        }
        Command::Kinematics { input, out } => {
            let skipped = pipeline::kinematics_files(&input, &out)?;
            if skipped > 0 {
                eprintln!("skipped {skipped} unreliable scatterers");
            }
            Ok(())
        }
        Command::CompareGnss { ps, gnss, maxdist, out } => {
            let r = pipeline::compare_gnss_files(&ps, &gnss, maxdist, &out)?;
            match r.correlation {
                Some(c) => println!("{} pairs, {} skipped, correlation {c:.4}", r.pairs.len(), r.skipped),
                None => println!("{} pairs, {} skipped, correlation undefined", r.pairs.len(), r.skipped),
            }
            Ok(())
        }
        Command::Run { config } => {
            let cfg = PipelineConfig::load(&config)?;
            let s = pipeline::run_pipeline(&cfg)?;
            for (name, rec) in &s.manifest.stages {
                let note = if s.skipped.contains(name) { " (unchanged)" } else { "" };
                println!("{name:<13} {:>8.2} s{note}", rec.elapsed_s);
            }
            Ok(())
        }
        Command::Render { input, out, value, scale, shape } => {
            let grid = if input.extension().is_some_and(|e| e == "mmsr") {
                let img = read_raster::<f64>(&input)?;
                Grid::new(img.n_az(), img.n_rg(), img.data().iter().map(|z| z.norm()).collect())?
            } else {
                read_value_grid(&input, &value, shape.map(|s| (s[0], s[1])))?
            };
            render_heatmap(&grid, &out, scale.into())
        }
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var("MMSAR_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("MMSAR_THREADS must be a count, got `{v}`"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
