use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::pulse::{PixelatedPulse, PulseWaveform};
use super::system::TwoLevelSystem;
use super::unitary::{State2, Unitary2};
use crate::error::{Error, Result};

/// Largest phase any single step may wind, in radians.
pub const DEFAULT_MAX_STEP_PHASE: f64 = 0.05;

/// Trajectory samples recorded by default, independent of the step count.
pub const DEFAULT_SAMPLES: usize = 2000;

/// Populations and states of a propagated initial state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State2>,
    /// `|<0|psi(t)>|^2` at each sample.
    pub populations: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, t: f64, psi: State2) {
        self.times.push(t);
        self.populations.push(psi[0].norm_sqr().clamp(0.0, 1.0));
        self.states.push(psi);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    /// Number of midpoint steps; `None` picks one from [`steps_for`].
    pub steps: Option<usize>,
    pub max_step_phase: f64,
    /// Trajectory samples (evenly spaced, snapped to step boundaries).
    /// Zero skips the trajectory entirely.
    pub samples: usize,
    pub initial_state: State2,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions {
            steps: None,
            max_step_phase: DEFAULT_MAX_STEP_PHASE,
            samples: DEFAULT_SAMPLES,
            initial_state: excited(),
        }
    }
}

impl PropagationOptions {
    pub fn with_steps(steps: usize) -> Self {
        PropagationOptions {
            steps: Some(steps),
            ..Default::default()
        }
    }

    pub fn unitary_only() -> Self {
        PropagationOptions {
            samples: 0,
            ..Default::default()
        }
    }
}

/// `|1>`, the state every sweep starts from unless told otherwise.
pub fn excited() -> State2 {
    [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
}

pub fn ground() -> State2 {
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub unitary: Unitary2,
    pub trajectory: Trajectory,
    pub steps: usize,
}

/// Step count keeping `dt * max(|eps|, omega, delta) <= max_step_phase`.
pub fn steps_for(
    system: &TwoLevelSystem,
    pulse: &PulseWaveform,
    t_start: f64,
    t_end: f64,
    max_step_phase: f64,
) -> usize {
    let rate = pulse
        .max_abs_on(t_start, t_end)
        .max(pulse.drive_frequency())
        .max(system.delta);
    let n = ((t_end - t_start) * rate / max_step_phase).ceil();
    if n.is_finite() {
        (n as usize).max(1)
    } else {
        1
    }
}

/// Time-ordered evolution over `[t_start, t_end]` with `steps` midpoint steps.
///
/// Each step applies the exact exponential of the Hamiltonian frozen at the
/// step midpoint. The trajectory starts from `|1>` with
/// [`DEFAULT_SAMPLES`] samples.
pub fn propagate(
    system: &TwoLevelSystem,
    pulse: &PulseWaveform,
    t_start: f64,
    t_end: f64,
    steps: usize,
) -> Result<(Unitary2, Trajectory)> {
    let p = propagate_with(system, pulse, t_start, t_end, &PropagationOptions::with_steps(steps))?;
    Ok((p.unitary, p.trajectory))
}

/// Evolution operator only, with the default step rule.
pub fn evolve(system: &TwoLevelSystem, pulse: &PulseWaveform, t_start: f64, t_end: f64) -> Result<Unitary2> {
    propagate_with(system, pulse, t_start, t_end, &PropagationOptions::unitary_only()).map(|p| p.unitary)
}

pub fn propagate_with(
    system: &TwoLevelSystem,
    pulse: &PulseWaveform,
    t_start: f64,
    t_end: f64,
    opts: &PropagationOptions,
) -> Result<Propagation> {
    if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
        return Err(Error::domain(format!("propagation interval [{t_start}, {t_end}] is empty")));
    }
    let steps = match opts.steps {
        Some(0) => return Err(Error::domain("step count must be positive")),
        Some(n) => n,
        None => aligned_steps(pulse, t_start, t_end, steps_for(system, pulse, t_start, t_end, opts.max_step_phase)),
    };
    let dt = (t_end - t_start) / steps as f64;
    let half_delta = 0.5 * system.delta;

    let sample_at: Vec<usize> = if opts.samples == 0 {
        Vec::new()
    } else {
        let mut idx: Vec<usize> = (0..=opts.samples)
            .map(|i| ((i as f64) * steps as f64 / opts.samples as f64).round() as usize)
            .collect();
        idx.dedup();
        idx
    };
    let mut trajectory = Trajectory::default();
    let mut next_sample = 0;
    let record = |k: usize, u: &Unitary2, traj: &mut Trajectory, next: &mut usize| {
        if *next < sample_at.len() && sample_at[*next] == k {
            traj.push(t_start + k as f64 * dt, u.apply(&opts.initial_state));
            *next += 1;
        }
    };

    let mut u = Unitary2::identity();
    record(0, &u, &mut trajectory, &mut next_sample);
    for k in 0..steps {
        let t = t_start + (k as f64 + 0.5) * dt;
        let eps = eval_fast(pulse, t)?;
        if !eps.is_finite() {
            return Err(Error::Numeric(format!("pulse evaluated to {eps} at t = {t}")));
        }
        u = Unitary2::exp_zx(0.5 * eps, half_delta, dt) * u;
        record(k + 1, &u, &mut trajectory, &mut next_sample);
    }
    Ok(Propagation {
        unitary: u,
        trajectory,
        steps,
    })
}

/// Rounds `steps` up to a multiple of the pixel count when the interval is
/// exactly the pixel support, so every step lies inside one pixel.
fn aligned_steps(pulse: &PulseWaveform, t_start: f64, t_end: f64, steps: usize) -> usize {
    match pulse {
        PulseWaveform::Pixelated(p) if !p.is_empty() => {
            let tol = 1e-9 * p.dt;
            if (t_start - p.start).abs() <= tol && (t_end - p.end()).abs() <= tol {
                steps.div_ceil(p.len()) * p.len()
            } else {
                steps
            }
        }
        _ => steps,
    }
}

#[inline]
fn eval_fast(pulse: &PulseWaveform, t: f64) -> Result<f64> {
    match pulse {
        PulseWaveform::LinearOscillating(p) => Ok(p.eval(t)),
        other => other.evaluate(t),
    }
}

/// Exact product of the pixel exponentials, earliest pixel rightmost.
pub fn pixel_unitary(system: &TwoLevelSystem, pulse: &PixelatedPulse) -> Unitary2 {
    let half_delta = 0.5 * system.delta;
    pulse
        .values
        .iter()
        .fold(Unitary2::identity(), |u, &eps| Unitary2::exp_zx(0.5 * eps, half_delta, pulse.dt) * u)
}

/// Per-pixel exponentials `exp(-i H_k dt)`.
pub fn pixel_steps(system: &TwoLevelSystem, pulse: &PixelatedPulse) -> Vec<Unitary2> {
    let half_delta = 0.5 * system.delta;
    pulse
        .values
        .iter()
        .map(|&eps| Unitary2::exp_zx(0.5 * eps, half_delta, pulse.dt))
        .collect()
}
