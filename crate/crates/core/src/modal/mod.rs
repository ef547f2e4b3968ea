//! Structural vibration model and vibration-energy analysis of offset series.

mod fit;
mod system;
mod vibration;

pub use fit::{fit_modal_params, fit_modal_spectrum, ModalFit, Mode, REJECT_DAMPING, REJECT_RESIDUAL};
pub use system::{dynamic_stiffness, forced_response, frequency_response, FrequencyResponse, ModalSystem, SINGULAR_CONDITION};
pub use vibration::{
    detect_anomalies, detrend, robust_z_scores, unitary_dft, vibration_map, Anomaly, AnomalyReport, VibrationMap,
    VibrationPoint, DEFAULT_Z, MIN_EPOCHS, MIN_POINTS,
};
