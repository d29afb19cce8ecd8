//! Multi-jump model of an oscillation-augmented linear sweep.
//!
//! Expanding `exp(i int eps)` in Bessel functions turns the drive into a sum
//! of Landau-Zener problems whose crossings sit at `t_m = -m omega / v` with
//! gaps `delta J_m(lambda / omega)`. Treating each crossing as an isolated
//! jump gives a product of 2x2 transfer matrices.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bessel::bessel_j;
use crate::dynamics::Unitary2;
use crate::error::{Error, Result};

/// Largest `delta / omega` for which jumps are treated as non-overlapping.
pub const MAX_GAP_TO_DRIVE_RATIO: f64 = 1.0 / 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpModelParams {
    pub delta: f64,
    pub v: f64,
    pub lambda: f64,
    pub omega: f64,
    pub phi: f64,
    /// Total sweep duration entering the Stokes phase logarithm.
    pub duration: f64,
    /// Highest photon order kept; jumps run over `-m0..=m0`.
    pub m0: u32,
    /// `delta <= omega / 25`: neighbouring jumps are well separated.
    pub non_overlapping: bool,
    /// `delta^2 / 4v <= 1`: the Stokes phase expansion holds.
    pub stokes_valid: bool,
}

impl JumpModelParams {
    /// `m0 = None` keeps every jump whose time lies inside
    /// `[-duration/2, duration/2]`, i.e. `floor(v T / 2 omega)`.
    pub fn new(
        delta: f64,
        v: f64,
        lambda: f64,
        omega: f64,
        phi: f64,
        duration: f64,
        m0: Option<u32>,
    ) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::domain(format!("drive frequency must be positive, got {omega}")));
        }
        if !(v > 0.0) {
            return Err(Error::domain(format!("sweep rate must be positive, got {v}")));
        }
        if !(duration > 0.0) {
            return Err(Error::domain(format!("duration must be positive, got {duration}")));
        }
        if !(delta >= 0.0) || !lambda.is_finite() || !phi.is_finite() {
            return Err(Error::domain("gap, amplitude and phase must be finite, gap non-negative"));
        }
        let m0 = m0.unwrap_or_else(|| default_m0(v, omega, duration));
        Ok(JumpModelParams {
            delta,
            v,
            lambda,
            omega,
            phi,
            duration,
            m0,
            non_overlapping: delta <= omega * MAX_GAP_TO_DRIVE_RATIO,
            stokes_valid: delta * delta / (4.0 * v) <= 1.0,
        })
    }

    pub fn jump_time(&self, m: i32) -> f64 {
        -(m as f64) * self.omega / self.v
    }

    pub fn effective_gap(&self, m: i32) -> f64 {
        self.delta * bessel_j(m, self.lambda / self.omega)
    }
}

pub fn default_m0(v: f64, omega: f64, duration: f64) -> u32 {
    (v * duration / (2.0 * omega)).floor().max(0.0) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub m: i32,
    pub time: f64,
    pub effective_gap: f64,
    /// Phase carried by the off-diagonal of this jump, including `sign_flip`.
    pub stokes_phase: f64,
    /// The effective gap is negative, which adds `pi` to the phase.
    pub sign_flip: bool,
    pub transition_prob: f64,
}

impl JumpEvent {
    /// Transfer matrix `[[c, e^{i p} s], [-e^{-i p} s, c]]` with
    /// `c = exp(-pi gap^2 / 4v)` and `s = sqrt(1 - c^2)`.
    pub fn matrix(&self) -> Unitary2 {
        jump_matrix(self.transition_prob, self.stokes_phase)
    }
}

fn jump_matrix(prob: f64, phase: f64) -> Unitary2 {
    let c = (1.0 - prob).max(0.0).sqrt();
    let s = prob.max(0.0).sqrt();
    let norm = c.hypot(s);
    let (c, s) = (c / norm, s / norm);
    let a = Complex64::from_polar(s, phase);
    Unitary2::new(Complex64::new(c, 0.0), a, -a.conj(), Complex64::new(c, 0.0))
}

/// Stokes phase of jump `m`, without the sign-flip contribution:
///
/// `-(delta^2/4v) ln(T^2 v/4) - pi/4 - m^2 omega^2 / 2v + m phi`
pub fn stokes_phase(m: i32, params: &JumpModelParams) -> Result<f64> {
    let JumpModelParams {
        delta,
        v,
        omega,
        phi,
        duration,
        ..
    } = *params;
    if !(v > 0.0) || !(duration > 0.0) {
        return Err(Error::domain("Stokes phase needs positive sweep rate and duration"));
    }
    let mf = m as f64;
    Ok(-(delta * delta / (4.0 * v)) * (duration * duration * v / 4.0).ln() - FRAC_PI_4
        - mf * mf * omega * omega / (2.0 * v)
        + mf * phi)
}

/// One event per photon order in `-m0..=m0`, in chronological order
/// (largest `m` first).
pub fn jump_events(params: &JumpModelParams) -> Result<Vec<JumpEvent>> {
    let m0 = params.m0 as i32;
    (-m0..=m0)
        .rev()
        .map(|m| {
            let gap = params.effective_gap(m);
            let sign_flip = gap < 0.0;
            let phase = stokes_phase(m, params)? + if sign_flip { PI } else { 0.0 };
            Ok(JumpEvent {
                m,
                time: params.jump_time(m),
                effective_gap: gap,
                stokes_phase: phase,
                sign_flip,
                transition_prob: -(-PI * gap * gap / (2.0 * params.v)).exp_m1(),
            })
        })
        .collect()
}

/// Chronologically ordered product of jump matrices, earliest rightmost.
pub fn multi_jump_unitary(params: &JumpModelParams) -> Result<Unitary2> {
    Ok(jump_events(params)?
        .iter()
        .fold(Unitary2::identity(), |u, e| e.matrix() * u))
}

/// Population of `|0>` predicted after each jump, starting from `|1>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub m: i32,
    /// Time of the jump that opens this plateau.
    pub start: f64,
    pub population: f64,
}

/// Running partial products of the jump model.
pub fn plateaus(params: &JumpModelParams) -> Result<Vec<Plateau>> {
    let mut u = Unitary2::identity();
    Ok(jump_events(params)?
        .iter()
        .map(|e| {
            u = e.matrix() * u;
            Plateau {
                m: e.m,
                start: e.time,
                population: u.u01.norm_sqr(),
            }
        })
        .collect())
}
