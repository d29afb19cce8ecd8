use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::nelder_mead::{nelder_mead_with_steps, SimplexConfig};
use super::OptimizationResult;
use crate::dynamics::{
    propagate_with, survival_error, OscillatingSweep, PropagationOptions, PulseWaveform, TwoLevelSystem,
    DEFAULT_MAX_STEP_PHASE,
};
use crate::error::{Error, Result};

/// Parameters of `v t + lambda cos(omega t + phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationParams {
    pub v: f64,
    pub lambda: f64,
    pub omega: f64,
    pub phi: f64,
}

impl OscillationParams {
    pub fn sweep(&self) -> OscillatingSweep {
        OscillatingSweep {
            v: self.v,
            lambda_r: self.lambda,
            omega: self.omega,
            phi: self.phi,
            window: None,
        }
    }

    /// `[ln v, lambda, ln omega, phi]`.
    fn to_search(self) -> [f64; 4] {
        [self.v.ln(), self.lambda, self.omega.ln(), self.phi]
    }

    fn from_search(x: &[f64]) -> Self {
        OscillationParams {
            v: x[0].exp(),
            lambda: x[1],
            omega: x[2].exp(),
            phi: x[3].rem_euclid(TAU),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.v, self.lambda, self.omega, self.phi]
    }
}

/// Survival error of an unwindowed oscillating sweep over `[-T/2, T/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationObjective {
    pub system: TwoLevelSystem,
    pub duration: f64,
    pub max_step_phase: f64,
}

impl OscillationObjective {
    pub fn new(system: TwoLevelSystem, duration: f64) -> Self {
        OscillationObjective {
            system,
            duration,
            max_step_phase: DEFAULT_MAX_STEP_PHASE,
        }
    }

    pub fn evaluate(&self, p: &OscillationParams) -> Result<f64> {
        oscillation_error(&self.system, self.duration, p, self.max_step_phase)
    }
}

pub fn oscillation_error(
    system: &TwoLevelSystem,
    duration: f64,
    params: &OscillationParams,
    max_step_phase: f64,
) -> Result<f64> {
    if !(duration > 0.0) {
        return Err(Error::domain(format!("duration must be positive, got {duration}")));
    }
    let pulse = PulseWaveform::LinearOscillating(params.sweep());
    let opts = PropagationOptions {
        max_step_phase,
        ..PropagationOptions::unitary_only()
    };
    let half = 0.5 * duration;
    Ok(survival_error(&propagate_with(system, &pulse, -half, half, &opts)?.unitary))
}

/// Nelder-Mead over `(v, lambda, omega, phi)` minimising the survival error.
///
/// The search runs in `(ln v, lambda, ln omega, phi)` so that `v` and `omega`
/// stay positive; `phi` is reported in `[0, 2 pi)`. The initial simplex moves
/// each log coordinate by `initial_simplex_scale`, `lambda` by that fraction
/// of itself and `phi` by that fraction of a full turn. Failed propagations
/// score `+inf`. `best_parameters` is `[v, lambda, omega, phi]`.
pub fn optimize_oscillation_params(
    objective: &OscillationObjective,
    initial: OscillationParams,
    config: &SimplexConfig,
) -> Result<OptimizationResult> {
    if !(objective.duration > 0.0) {
        return Err(Error::domain(format!("duration must be positive, got {}", objective.duration)));
    }
    if !(initial.v > 0.0) || !(initial.omega > 0.0) {
        return Err(Error::domain("sweep rate and drive frequency must be positive"));
    }
    if !initial.lambda.is_finite() || !initial.phi.is_finite() {
        return Err(Error::domain("amplitude and phase must be finite"));
    }
    let scale = config.initial_simplex_scale;
    let lambda_step = if initial.lambda == 0.0 { scale } else { scale * initial.lambda.abs() };
    let steps = [scale, lambda_step, scale, scale * TAU];
    let f = |x: &[f64]| {
        objective
            .evaluate(&OscillationParams::from_search(x))
            .unwrap_or(f64::INFINITY)
    };
    let mut result = nelder_mead_with_steps(f, &initial.to_search(), &steps, config)?;
    result.best_parameters = OscillationParams::from_search(&result.best_parameters).to_vec();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncoupled_returns_initial() {
        let obj = OscillationObjective::new(TwoLevelSystem::uncoupled(), 20.0);
        let p0 = OscillationParams {
            v: 8.0,
            lambda: 120.0,
            omega: 50.0,
            phi: 0.3,
        };
        let r = optimize_oscillation_params(&obj, p0, &SimplexConfig::default()).unwrap();
        assert_eq!(r.best_value, 0.0);
        assert_eq!(r.iterations_used, 0);
        assert!(r.converged);
        let got = r.best_parameters;
        for (a, b) in got.iter().zip(p0.to_vec()) {
            assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn parameters_stay_in_range() {
        let obj = OscillationObjective {
            max_step_phase: 0.2,
            ..OscillationObjective::new(TwoLevelSystem::new(1.0).unwrap(), 12.0)
        };
        let p0 = OscillationParams {
            v: 2.0,
            lambda: 6.0,
            omega: 5.0,
            phi: 6.2,
        };
        let cfg = SimplexConfig {
            max_iterations: 60,
            ..Default::default()
        };
        let r = optimize_oscillation_params(&obj, p0, &cfg).unwrap();
        let p = &r.best_parameters;
        assert!(p[0] > 0.0 && p[2] > 0.0);
        assert!((0.0..TAU).contains(&p[3]));
        assert!(r.best_value <= obj.evaluate(&p0).unwrap());
    }

    #[test]
    fn rejects_bad_inputs() {
        let obj = OscillationObjective::new(TwoLevelSystem::new(1.0).unwrap(), 0.0);
        let p0 = OscillationParams {
            v: 1.0,
            lambda: 1.0,
            omega: 1.0,
            phi: 0.0,
        };
        assert!(optimize_oscillation_params(&obj, p0, &SimplexConfig::default()).is_err());
        let obj = OscillationObjective::new(TwoLevelSystem::new(1.0).unwrap(), 5.0);
        let bad = OscillationParams { v: -1.0, ..p0 };
        assert!(optimize_oscillation_params(&obj, bad, &SimplexConfig::default()).is_err());
    }
}
