use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the processing chain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid band: {0}")]
    InvalidBand(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("scatterer {index} leaves the scene: {detail}")]
    SimulationBounds { index: usize, detail: String },

    #[error("invalid chirp: {0}")]
    InvalidChirp(String),

    #[error("invalid metadata: {0}")]
    InvalidMeta(String),

    #[error("plan infeasible: {0}")]
    PlanInfeasible(String),

    #[error("underdetermined fit: {needed} samples needed, {got} available")]
    Underdetermined { needed: usize, got: usize },

    #[error("matrix is singular at omega = {omega}")]
    Resonance { omega: f64 },

    #[error("every grid point is singular")]
    DegenerateGrid,

    #[error("modal fit failed: {reason} (residual trace {trace:?})")]
    FitFailed { reason: String, trace: Vec<f64> },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("render error: {0}")]
    Render(String),

    #[error("format error in {path}: {detail}")]
    Format { path: PathBuf, detail: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad inputs rather than numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Resonance { .. }
            | Error::DegenerateGrid
            | Error::FitFailed { .. }
            | Error::Singular(_)
            | Error::Underdetermined { .. } => false,
            Error::Stage { source, .. } => source.is_input_error(),
            _ => true,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
