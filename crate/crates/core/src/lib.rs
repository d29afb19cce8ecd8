//! Simulation and pulse engineering for a driven two-level system at an
//! avoided crossing.
//!
//! * [`dynamics`]: Hamiltonian, waveforms, propagation, fidelity metrics.
//! * [`analytic`]: Bessel-expansion multi-jump model and diabatic pulse design.
//! * [`optim`]: Nelder-Mead over sweep parameters and GRAPE on pixelated pulses.
//! * [`experiments`]: parameter scans, speed-limit estimation and fitting.
//! * [`cli`]: configuration, CSV/SVG output and the command dispatcher.

pub mod analytic;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod optim;

pub use error::{Error, Result};
