//! Persistent-scatterer interferometry over a stack of co-registered images.

mod gnss;
mod kinematics;
mod phase;
mod rice;
mod stack;

pub use gnss::{compare_gnss, haversine, pearson, ComparisonReport, GnssPair, GnssRecord, PsVelocity, EARTH_RADIUS_M};
pub use kinematics::{
    difference, find_inversion_lines, kinematics, Crossing, InversionLines, Kinematics, Profile, DAYS_PER_YEAR,
    MIN_KINEMATIC_EPOCHS,
};
pub use phase::{
    mm_to_phase, phase_model, phase_to_mm, smooth3, unwrap_temporal, wrap, PairGeometry, PhaseComponents,
    PhaseGeometry, PsPhase, UNWRAP_MARGIN,
};
pub use rice::{bessel_i0e, bessel_i1e, fit_rice, rice_pdf, RiceFit, RiceStatus, MIN_SAMPLES};
pub use stack::{planted_stack, select_ps, PsSet, SlcStack, StabilityMode, DEFAULT_STABILITY};
