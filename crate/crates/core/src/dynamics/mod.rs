//! Two-level Hamiltonian, drive waveforms, time evolution and fidelities.

pub mod fidelity;
pub mod propagate;
pub mod pulse;
pub mod system;
pub mod unitary;

pub use fidelity::{
    adiabatic_transfer, gate_fidelity, lz_probability, overlap, phase_insensitive_fidelity, survival_error,
    upper_eigenstate,
};
pub use propagate::{
    evolve, excited, ground, pixel_steps, pixel_unitary, propagate, propagate_with, steps_for, Propagation,
    PropagationOptions, Trajectory, DEFAULT_MAX_STEP_PHASE, DEFAULT_SAMPLES,
};
pub use pulse::{gaussian_smooth_values, ErfTanSweep, OscillatingSweep, PixelatedPulse, PulseWaveform, Window};
pub use system::TwoLevelSystem;
pub use unitary::{State2, Unitary2};
