use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::{jump_events, plateaus, JumpEvent, JumpModelParams, Plateau};
use crate::dynamics::{
    gaussian_smooth_values, propagate_with, survival_error, PropagationOptions, PulseWaveform, Trajectory,
    TwoLevelSystem, Unitary2, DEFAULT_SAMPLES,
};
use crate::error::{Error, Result};

/// Samples per drive period used when the pulse oscillates.
const SAMPLES_PER_PERIOD: f64 = 16.0;

/// Jumps whose predicted population change is below this are not located.
pub const MIN_LOCATED_CHANGE: f64 = 2e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRequest {
    pub delta: f64,
    pub pulse: PulseWaveform,
    pub t_start: f64,
    pub t_end: f64,
    /// Minimum number of trajectory samples.
    pub samples: usize,
}

impl TraceRequest {
    pub fn new(delta: f64, pulse: impl Into<PulseWaveform>, t_start: f64, t_end: f64) -> Self {
        TraceRequest {
            delta,
            pulse: pulse.into(),
            t_start,
            t_end,
            samples: DEFAULT_SAMPLES,
        }
    }
}

/// A jump located in the simulated dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocatedJump {
    pub m: i32,
    /// `-m omega / v`.
    pub predicted: f64,
    pub located: f64,
    /// Model population change across this jump.
    pub population_change: f64,
}

/// Model plateau next to the simulated population averaged over the middle
/// half of the same interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauCheck {
    pub m: i32,
    pub start: f64,
    pub end: f64,
    pub predicted: f64,
    pub simulated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryTrace {
    pub trajectory: Trajectory,
    /// `eps(t)` at the trajectory times.
    pub epsilon: Vec<f64>,
    pub unitary: Unitary2,
    pub survival_error: f64,
    /// Multi-jump overlay; empty unless the pulse is an unwindowed
    /// oscillating sweep with a positive gap.
    pub jumps: Vec<JumpEvent>,
    pub plateaus: Vec<Plateau>,
    pub located_jumps: Vec<LocatedJump>,
    pub plateau_checks: Vec<PlateauCheck>,
}

impl TrajectoryTrace {
    pub fn max_jump_offset(&self) -> Option<f64> {
        self.located_jumps
            .iter()
            .map(|j| (j.located - j.predicted).abs())
            .reduce(f64::max)
    }

    pub fn max_plateau_deviation(&self) -> Option<f64> {
        self.plateau_checks
            .iter()
            .map(|p| (p.simulated - p.predicted).abs())
            .reduce(f64::max)
    }
}

/// Propagates `|1>` and overlays the multi-jump model.
///
/// Jumps are located as the centres of point symmetry of the smoothed
/// coherence in the frame co-rotating with `eps`: near an isolated crossing
/// the amplitude traces a Cornu spiral about its value at the crossing time.
pub fn trace_trajectory(req: &TraceRequest) -> Result<TrajectoryTrace> {
    req.pulse.validate()?;
    let system = if req.delta == 0.0 {
        TwoLevelSystem::uncoupled()
    } else {
        TwoLevelSystem::new(req.delta)?
    };
    let span = req.t_end - req.t_start;
    let omega = req.pulse.drive_frequency();
    let dense = (span * omega / TAU * SAMPLES_PER_PERIOD).ceil();
    let samples = if dense.is_finite() {
        req.samples.max(dense as usize)
    } else {
        req.samples
    };
    let opts = PropagationOptions {
        samples: samples.max(1),
        ..Default::default()
    };
    let prop = propagate_with(&system, &req.pulse, req.t_start, req.t_end, &opts)?;
    let trajectory = prop.trajectory;
    // the last sample sits on the open end of a pixelated support
    let last = req.t_end - 1e-12 * span;
    let epsilon = trajectory
        .times
        .iter()
        .map(|&t| req.pulse.evaluate(t.min(last)))
        .collect::<Result<Vec<_>>>()?;

    let mut trace = TrajectoryTrace {
        survival_error: survival_error(&prop.unitary),
        unitary: prop.unitary,
        trajectory,
        epsilon,
        jumps: Vec::new(),
        plateaus: Vec::new(),
        located_jumps: Vec::new(),
        plateau_checks: Vec::new(),
    };
    let sweep = match &req.pulse {
        PulseWaveform::LinearOscillating(p) if p.window.is_none() && p.v > 0.0 && req.delta > 0.0 => *p,
        _ => return Ok(trace),
    };
    let omega = if sweep.omega > 0.0 { sweep.omega } else { 1.0 };
    let m0 = if sweep.lambda_r == 0.0 { Some(0) } else { None };
    let params = JumpModelParams::new(req.delta, sweep.v, sweep.lambda_r, omega, sweep.phi, span, m0)?;
    let jumps: Vec<JumpEvent> = jump_events(&params)?
        .into_iter()
        .filter(|e| e.time > req.t_start && e.time < req.t_end)
        .collect();
    let levels: Vec<Plateau> = plateaus(&params)?
        .into_iter()
        .filter(|p| p.start > req.t_start && p.start < req.t_end)
        .collect();

    trace.plateau_checks = check_plateaus(&trace.trajectory, &levels, req.t_end, omega);
    let phase = accumulated_phase(&req.pulse, &trace.trajectory.times)?;
    let (spacing, smoothing) = if sweep.lambda_r != 0.0 {
        (omega / sweep.v, TAU / omega)
    } else {
        // a lone crossing: window of a few Landau-Zener times, no drive to average out
        ((8.0 / sweep.v.sqrt()).min(0.5 * span), 0.0)
    };
    trace.located_jumps = locate_jumps(&trace.trajectory, &phase, &levels, spacing, smoothing)?;
    trace.jumps = jumps;
    trace.plateaus = levels;
    Ok(trace)
}

/// `int_{t_0}^{t} eps` at each sample time, by midpoint sums fine enough to
/// resolve `eps`.
fn accumulated_phase(pulse: &PulseWaveform, times: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in times.windows(2) {
        let (a, b) = (w[0], w[1]);
        let rate = pulse.max_abs_on(a, b).max(1.0);
        let n = (((b - a) * rate / 0.01).ceil() as usize).max(1);
        let h = (b - a) / n as f64;
        for k in 0..n {
            acc += pulse.evaluate(a + (k as f64 + 0.5) * h)? * h;
        }
        out.push(acc);
    }
    Ok(out)
}

fn check_plateaus(traj: &Trajectory, levels: &[Plateau], t_end: f64, omega: f64) -> Vec<PlateauCheck> {
    let dt = sample_spacing(traj);
    let smooth = gaussian_smooth_values(&traj.populations, TAU / omega / dt);
    let mut prev = 0.0;
    levels
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let change = (p.population - prev).abs();
            prev = p.population;
            let end = levels.get(i + 1).map_or(t_end, |n| n.start);
            let (a, b) = (p.start + 0.25 * (end - p.start), end - 0.25 * (end - p.start));
            let inside: Vec<f64> = traj
                .times
                .iter()
                .zip(&smooth)
                .filter(|(t, _)| **t >= a && **t <= b)
                .map(|(_, v)| *v)
                .collect();
            if inside.is_empty() || (i > 0 && change == 0.0) {
                return None;
            }
            Some(PlateauCheck {
                m: p.m,
                start: p.start,
                end,
                predicted: p.population,
                simulated: inside.iter().sum::<f64>() / inside.len() as f64,
            })
        })
        .collect()
}

fn sample_spacing(traj: &Trajectory) -> f64 {
    if traj.len() < 2 {
        1.0
    } else {
        (traj.times[traj.len() - 1] - traj.times[0]) / (traj.len() - 1) as f64
    }
}

/// Searches `predicted +- 0.3 s` for the centre `c` minimising
/// `sum_k |g(c + k) + g(c - k) - 2 g(c)|^2` over `k <= 0.45 s`, where `g` is
/// the rotating-frame coherence smoothed over `smoothing` and `s` the
/// spacing between jumps.
fn locate_jumps(
    traj: &Trajectory,
    phase: &[f64],
    levels: &[Plateau],
    spacing: f64,
    smoothing: f64,
) -> Result<Vec<LocatedJump>> {
    let n = traj.len();
    if n < 3 {
        return Err(Error::domain("trajectory too short to locate jumps"));
    }
    let dt = sample_spacing(traj);
    let coherence: Vec<Complex64> = traj
        .states
        .iter()
        .zip(phase)
        .map(|(s, p)| Complex64::from_polar(1.0, *p) * s[0] * s[1].conj())
        .collect();
    let sigma = smoothing / dt;
    let re: Vec<f64> = gaussian_smooth_values(&coherence.iter().map(|c| c.re).collect::<Vec<_>>(), sigma);
    let im: Vec<f64> = gaussian_smooth_values(&coherence.iter().map(|c| c.im).collect::<Vec<_>>(), sigma);
    let g: Vec<Complex64> = re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect();

    let half = ((0.45 * spacing / dt) as isize).max(1);
    let reach = ((0.3 * spacing / dt) as isize).max(1);
    let t0 = traj.times[0];
    let mut prev = 0.0;
    let mut out = Vec::new();
    for p in levels {
        let change = (p.population - prev).abs();
        prev = p.population;
        if change < MIN_LOCATED_CHANGE {
            continue;
        }
        let centre = ((p.start - t0) / dt).round() as isize;
        let mut best: Option<(f64, usize)> = None;
        for c in (centre - reach)..=(centre + reach) {
            if c - half < 0 || c + half >= n as isize {
                continue;
            }
            let c = c as usize;
            let h = half as usize;
            let mid = 2.0 * g[c];
            let sse: f64 = (1..=h).map(|k| (g[c + k] + g[c - k] - mid).norm_sqr()).sum();
            if best.is_none_or(|(b, _)| sse < b) {
                best = Some((sse, c));
            }
        }
        if let Some((_, c)) = best {
            out.push(LocatedJump {
                m: p.m,
                predicted: p.start,
                located: traj.times[c],
                population_change: change,
            });
        }
    }
    Ok(out)
}
