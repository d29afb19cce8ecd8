use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::pulse::erf;
use crate::dynamics::{
    evolve, phase_insensitive_fidelity, pixel_unitary, propagate_with, survival_error, ErfTanSweep,
    OscillatingSweep, PixelatedPulse, PropagationOptions, PulseWaveform, TwoLevelSystem, Unitary2,
};
use crate::error::{Error, Result};
use crate::optim::{grape_optimize, GrapeConfig, OscillationParams};

/// Simulated span for windowed sweeps: long enough that the bare-basis
/// ringing of the undriven tails has died down.
pub const DEFAULT_WINDOWED_SPAN: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, unit: &str, values: Vec<f64>) -> Self {
        Axis {
            name: name.into(),
            unit: unit.into(),
            values,
        }
    }
}

/// Metric sampled on one or two axes, row-major with `axis1` outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub metric_name: String,
    pub values: Vec<f64>,
    /// Flat indices of cells whose evaluation failed; their value is 0.
    pub failed: Vec<usize>,
    pub metadata: Value,
}

impl ScanResult {
    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.values.len(), self.axis2.as_ref().map_or(1, |a| a.values.len()))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.shape().1 + j]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.shape();
        if self.values.len() != a * b {
            return Err(Error::Numeric(format!(
                "scan holds {} values for a {a} x {b} grid",
                self.values.len()
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("scan value {i} is {}", self.values[i])));
        }
        Ok(())
    }
}

fn record(values: Vec<Result<f64>>) -> (Vec<f64>, Vec<usize>) {
    let mut failed = Vec::new();
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, r)| match r {
            Ok(v) if v.is_finite() => v,
            _ => {
                failed.push(i);
                0.0
            }
        })
        .collect();
    (values, failed)
}

/// Survival error of a windowed sweep at each drive phase.
///
/// The sweep is simulated over `[-span/2, span/2]`; the window only gates the
/// oscillation, the linear part keeps running.
pub fn scan_phase_sensitivity(
    delta: f64,
    base: &OscillatingSweep,
    phases: &[f64],
    span: f64,
) -> Result<ScanResult> {
    if phases.len() < 32 {
        return Err(Error::domain(format!("need at least 32 phase samples, got {}", phases.len())));
    }
    if base.window.is_none() {
        return Err(Error::domain("phase scan expects a windowed sweep"));
    }
    let system = TwoLevelSystem::new(delta)?;
    PulseWaveform::from(*base).validate()?;
    let cells: Vec<Result<f64>> = phases
        .par_iter()
        .map(|&phi| {
            let pulse = PulseWaveform::from(OscillatingSweep { phi, ..*base });
            evolve(&system, &pulse, -0.5 * span, 0.5 * span).map(|u| survival_error(&u))
        })
        .collect();
    let (values, failed) = record(cells);
    let scan = ScanResult {
        axis1: Axis::new("phi", "rad", phases.to_vec()),
        axis2: None,
        metric_name: "survival_error".into(),
        values,
        failed,
        metadata: serde_json::json!({ "delta": delta, "base": base, "span": span }),
    };
    scan.validate()?;
    Ok(scan)
}

/// `n` phases evenly covering `[0, 2 pi)`.
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

fn oscillation_survival(system: &TwoLevelSystem, duration: f64, p: &OscillationParams) -> Result<f64> {
    let pulse = PulseWaveform::from(p.sweep());
    let half = 0.5 * duration;
    let prop = propagate_with(system, &pulse, -half, half, &PropagationOptions::unitary_only())?;
    Ok(survival_error(&prop.unitary))
}

/// `log10(survival_error)` on a `(v, omega)` grid with `lambda`, `phi` fixed.
pub fn scan_robustness(
    delta: f64,
    optimum: &OscillationParams,
    duration: f64,
    v_grid: &[f64],
    omega_grid: &[f64],
) -> Result<ScanResult> {
    if v_grid.is_empty() || omega_grid.is_empty() {
        return Err(Error::domain("robustness grids must be non-empty"));
    }
    let system = TwoLevelSystem::new(delta)?;
    let cells: Vec<(f64, f64)> = v_grid
        .iter()
        .flat_map(|&v| omega_grid.iter().map(move |&w| (v, w)))
        .collect();
    let raw: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(v, omega)| {
            let p = OscillationParams { v, omega, ..*optimum };
            oscillation_survival(&system, duration, &p).map(|e| e.max(f64::MIN_POSITIVE).log10())
        })
        .collect();
    let (values, failed) = record(raw);
    let scan = ScanResult {
        axis1: Axis::new("v", "delta^2", v_grid.to_vec()),
        axis2: Some(Axis::new("omega", "delta", omega_grid.to_vec())),
        metric_name: "log10_survival_error".into(),
        values,
        failed,
        metadata: serde_json::json!({ "delta": delta, "optimum": optimum, "duration": duration }),
    };
    scan.validate()?;
    Ok(scan)
}

/// Survival errors after moving `(ln v, ln omega)` by `relative` along and
/// across the valley `omega^2 / v = const`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValleyProbe {
    pub at_optimum: f64,
    /// Worse of the two moves keeping `omega^2 / v` fixed.
    pub along: f64,
    /// Worse of the two perpendicular moves.
    pub across: f64,
}

impl ValleyProbe {
    pub fn along_degradation(&self) -> f64 {
        (self.along - self.at_optimum).max(0.0)
    }

    pub fn across_degradation(&self) -> f64 {
        (self.across - self.at_optimum).max(0.0)
    }
}

pub fn probe_valley(delta: f64, optimum: &OscillationParams, duration: f64, relative: f64) -> Result<ValleyProbe> {
    let system = TwoLevelSystem::new(delta)?;
    // unit vectors in (ln v, ln omega); along keeps 2 ln omega - ln v fixed
    let norm = 5f64.sqrt();
    let along = (2.0 / norm, 1.0 / norm);
    let across = (-1.0 / norm, 2.0 / norm);
    let moved = |dir: (f64, f64), sign: f64| OscillationParams {
        v: optimum.v * (sign * relative * dir.0).exp(),
        omega: optimum.omega * (sign * relative * dir.1).exp(),
        ..*optimum
    };
    let points = [
        *optimum,
        moved(along, 1.0),
        moved(along, -1.0),
        moved(across, 1.0),
        moved(across, -1.0),
    ];
    let e: Vec<f64> = points
        .par_iter()
        .map(|p| oscillation_survival(&system, duration, p))
        .collect::<Result<_>>()?;
    Ok(ValleyProbe {
        at_optimum: e[0],
        along: e[1].max(e[2]),
        across: e[3].max(e[4]),
    })
}

/// Erf-tan family, pixelation and GRAPE settings for the adiabatic scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdiabaticScanConfig {
    /// `lambda_erf T`, fixed so the pulse shape is the same at every duration.
    pub lambda_t: f64,
    pub grape: GrapeConfig,
    /// Gaussian smoothing width in pixels; converted to time per cell.
    pub smoothing_pixels: Option<f64>,
    /// Pixel count is doubled until the pixelated seed's transfer fidelity
    /// is within this of the continuous one.
    pub pixel_tolerance: f64,
    pub max_pixels: usize,
}

impl Default for AdiabaticScanConfig {
    fn default() -> Self {
        AdiabaticScanConfig {
            lambda_t: 2.0,
            grape: GrapeConfig {
                max_iterations: 2000,
                ..Default::default()
            },
            smoothing_pixels: Some(4.0),
            pixel_tolerance: 1e-3,
            max_pixels: 4096,
        }
    }
}

impl AdiabaticScanConfig {
    pub fn seed(&self, delta: f64, eps0: f64, duration: f64) -> Result<ErfTanSweep> {
        ErfTanSweep::new(eps0, self.lambda_t / duration, duration, delta)
    }

    /// Duration at which the seed crosses `eps = 0` at speed `delta^2`, in
    /// the limit `eps0 >> delta`: `sqrt(pi) lambda_t / (erf(lambda_t/2) delta)`.
    pub fn adiabatic_estimate(&self, delta: f64) -> f64 {
        PI.sqrt() * self.lambda_t / (erf(0.5 * self.lambda_t) * delta)
    }

    /// Smallest power-of-two multiple of the configured pixel count that
    /// reproduces the continuous seed.
    pub fn pixelate(&self, system: &TwoLevelSystem, seed: &ErfTanSweep) -> Result<PixelatedPulse> {
        let pulse = PulseWaveform::from(*seed);
        let half = 0.5 * seed.duration;
        let reference = phase_insensitive_fidelity(&evolve(system, &pulse, -half, half)?);
        let mut n = self.grape.pixel_count;
        loop {
            let px = pulse.pixelate(n, -half, half)?;
            let f = phase_insensitive_fidelity(&pixel_unitary(system, &px));
            if (f - reference).abs() <= self.pixel_tolerance || 2 * n > self.max_pixels {
                return Ok(px);
            }
            n *= 2;
        }
    }

    /// Gate fidelity against `sigma_x` after GRAPE on the pixelated seed.
    pub fn optimized_fidelity(&self, system: &TwoLevelSystem, seed: &ErfTanSweep) -> Result<f64> {
        let px = self.pixelate(system, seed)?;
        let config = GrapeConfig {
            pixel_count: px.len(),
            smoothing_sigma: self.smoothing_pixels.map(|s| s * px.dt),
            ..self.grape
        };
        let r = grape_optimize(system, &px, &Unitary2::sigma_x(), &config)?;
        Ok(1.0 - r.best_value)
    }
}

/// `n` points from `a` to `b`, evenly spaced in `ln`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Default `(eps0, T)` axes: `eps0` in `[2 delta, 50 delta]` and `T` in
/// `[0.5, 4]` times the adiabatic estimate, both log-spaced with `n` points.
pub fn default_adiabatic_grid(delta: f64, config: &AdiabaticScanConfig, n: usize) -> (Vec<f64>, Vec<f64>) {
    let t_ad = config.adiabatic_estimate(delta);
    (log_grid(2.0 * delta, 50.0 * delta, n), log_grid(0.5 * t_ad, 4.0 * t_ad, n))
}

/// Erf-tan seeds on an `(eps0, T)` grid. Unoptimized: phase-insensitive
/// fidelity of the continuous seed. Optimized: gate fidelity against
/// `sigma_x` after GRAPE.
pub fn scan_adiabatic_fidelity(
    delta: f64,
    eps0_grid: &[f64],
    t_grid: &[f64],
    optimize: bool,
    config: &AdiabaticScanConfig,
) -> Result<ScanResult> {
    if eps0_grid.is_empty() || t_grid.is_empty() {
        return Err(Error::domain("adiabatic scan grids must be non-empty"));
    }
    let system = TwoLevelSystem::new(delta)?;
    let cells: Vec<(f64, f64)> = eps0_grid
        .iter()
        .flat_map(|&e| t_grid.iter().map(move |&t| (e, t)))
        .collect();
    let raw: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(eps0, duration)| {
            let seed = config.seed(delta, eps0, duration)?;
            if optimize {
                config.optimized_fidelity(&system, &seed)
            } else {
                let half = 0.5 * duration;
                evolve(&system, &PulseWaveform::from(seed), -half, half).map(|u| phase_insensitive_fidelity(&u))
            }
        })
        .collect();
    let (values, failed) = record(raw);
    let scan = ScanResult {
        axis1: Axis::new("eps0", "energy", eps0_grid.to_vec()),
        axis2: Some(Axis::new("T", "time", t_grid.to_vec())),
        metric_name: if optimize { "gate_fidelity" } else { "phase_insensitive_fidelity" }.into(),
        values,
        failed,
        metadata: serde_json::json!({ "delta": delta, "optimize": optimize, "config": config }),
    };
    scan.validate()?;
    Ok(scan)
}
