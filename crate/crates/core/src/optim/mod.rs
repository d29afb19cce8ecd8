//! Nelder-Mead over the oscillating-sweep parameters and GRAPE on pixelated
//! pulses.

pub mod grape;
pub mod nelder_mead;
pub mod oscillation;

use serde::{Deserialize, Serialize};

use crate::dynamics::PixelatedPulse;

pub use grape::{exp_zx_derivative, grape_gradient, grape_optimize, pulse_fidelity, GrapeConfig};
pub use nelder_mead::{nelder_mead, nelder_mead_with_steps, SimplexConfig};
pub use oscillation::{optimize_oscillation_params, oscillation_error, OscillationParams, OscillationObjective};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    /// Optimizer coordinates at the best point; pixel values for GRAPE.
    pub best_parameters: Vec<f64>,
    pub best_pulse: Option<PixelatedPulse>,
    /// Minimised quantity: the objective for Nelder-Mead, `1 - fidelity`
    /// for GRAPE.
    pub best_value: f64,
    pub iterations_used: usize,
    pub converged: bool,
    /// Best value after each iteration, starting from the initial point for
    /// GRAPE.
    pub value_history: Vec<f64>,
}
