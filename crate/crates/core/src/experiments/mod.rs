//! Figure-level studies: trajectory traces, parameter scans and the
//! speed-limit analysis.

pub mod qsl;
pub mod scan;
pub mod trajectory;

pub use qsl::{estimate_qsl, estimate_qsl_with, fit_qsl, qsl_model, QslConfig, QslFit, QslPoint};
pub use scan::{
    default_adiabatic_grid, log_grid, phase_grid, probe_valley, scan_adiabatic_fidelity, scan_phase_sensitivity,
    scan_robustness, AdiabaticScanConfig, Axis, ScanResult, ValleyProbe, DEFAULT_WINDOWED_SPAN,
};
pub use trajectory::{
    trace_trajectory, LocatedJump, PlateauCheck, TraceRequest, TrajectoryTrace, MIN_LOCATED_CHANGE,
};
