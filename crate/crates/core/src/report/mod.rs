//! Stage output formats: CSV tables, graymap heatmaps and the run manifest.

pub mod heatmap;
pub mod manifest;
pub mod tables;

pub use heatmap::{decode_pgm, encode_pgm, levels, read_pgm, render_heatmap, Grid, Scale};
pub use manifest::{file_digest, sha256_hex, write_atomic, RunManifest, StageRecord};
