//! Micro-motion estimation from single synthetic aperture radar acquisitions.
//!
//! The processing chain simulates raw echoes of vibrating point scatterers,
//! focuses them, splits the Doppler band into time-ordered sub-apertures,
//! tracks sub-pixel offsets between them and turns the offset series into
//! vibration energy maps. A persistent-scatterer branch covers long-term
//! displacement, velocity and acceleration.

pub mod coreg;
pub mod error;
pub mod focus;
pub mod linalg;
pub mod modal;
pub mod pipeline;
pub mod psinsar;
pub mod raster;
pub mod report;
pub mod scalar;
pub mod scene;
pub mod subaperture;

pub use error::{Error, Result};
pub use raster::{AcquisitionMeta, BandWindow, ComplexRaster, Taper};
pub use scalar::Real;

pub type ComplexRaster64 = ComplexRaster<f64>;
pub type ComplexRaster32 = ComplexRaster<f32>;
pub type SubApertureStack64 = subaperture::SubApertureStack<f64>;
pub type SubApertureStack32 = subaperture::SubApertureStack<f32>;
pub type ModalSystem64 = modal::ModalSystem<f64>;
pub type ModalSystem32 = modal::ModalSystem<f32>;
