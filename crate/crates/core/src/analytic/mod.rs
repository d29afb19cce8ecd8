//! Closed-form photon-assisted Landau-Zener machinery.

pub mod bessel;
pub mod design;
pub mod jumps;

pub use bessel::{bessel_j, J0_FIRST_ZERO};
pub use design::{design_diabatic_pulse, DiabaticDesign};
pub use jumps::{
    default_m0, jump_events, multi_jump_unitary, plateaus, stokes_phase, JumpEvent, JumpModelParams, Plateau,
};
