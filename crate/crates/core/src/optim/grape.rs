use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::OptimizationResult;
use crate::dynamics::unitary::sinc;
use crate::dynamics::{gate_fidelity, gaussian_smooth_values, overlap, PixelatedPulse, TwoLevelSystem, Unitary2};
use crate::error::{Error, Result};

/// Learning rates below this end the line search.
const MIN_LEARNING_RATE: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrapeConfig {
    pub pixel_count: usize,
    /// Initial step `eps` in `u <- u + eps grad`; halved on a rejected step
    /// and grown by 10% on an accepted one.
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Stop once `1 - fidelity` falls to this value.
    pub target_error: f64,
    /// Pixels held fixed at each end.
    pub buffer_pixels: usize,
    /// Gaussian width (time units) applied to every update direction.
    pub smoothing_sigma: Option<f64>,
    /// Polak-Ribiere conjugate directions instead of the plain gradient.
    pub conjugate: bool,
}

impl Default for GrapeConfig {
    fn default() -> Self {
        GrapeConfig {
            pixel_count: 256,
            learning_rate: 1.0,
            max_iterations: 5000,
            target_error: 1e-5,
            buffer_pixels: 3,
            smoothing_sigma: None,
            conjugate: true,
        }
    }
}

impl GrapeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pixel_count <= 2 * self.buffer_pixels {
            return Err(Error::validation(
                "pixel_count",
                format!("{} pixels leave nothing free between {} buffers", self.pixel_count, self.buffer_pixels),
            ));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::validation("learning_rate", "must be positive and finite"));
        }
        if !(self.target_error >= 0.0) {
            return Err(Error::validation("target_error", "must be non-negative"));
        }
        if let Some(s) = self.smoothing_sigma {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::validation("smoothing_sigma", "must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// `exp(-i (a sigma_z + b sigma_x) tau)` and its derivative with respect to `a`.
///
/// With `s = sin(theta)/theta` and `q = (theta cos(theta) - sin(theta))/theta^3`:
/// `dU/da = -tau^2 a s 1 - i [tau^3 a q (a sigma_z + b sigma_x) + tau s sigma_z]`.
pub fn exp_zx_derivative(a: f64, b: f64, tau: f64) -> (Unitary2, Unitary2) {
    let r = a.hypot(b);
    let theta = r * tau;
    let (sin, cos) = theta.sin_cos();
    let s = sinc(theta, sin);
    let q = if theta.abs() < 1e-3 {
        let t2 = theta * theta;
        -1.0 / 3.0 + t2 / 30.0 - t2 * t2 / 840.0
    } else {
        (theta * cos - sin) / (theta * theta * theta)
    };
    let u = Unitary2::exp_zx(a, b, tau);
    let diag = -tau * tau * a * s;
    let k = tau * tau * tau * a * q;
    let z = k * a + tau * s;
    let x = k * b;
    let du = Unitary2::new(
        Complex64::new(diag, -z),
        Complex64::new(0.0, -x),
        Complex64::new(0.0, -x),
        Complex64::new(diag, z),
    );
    (u, du)
}

/// Gate overlap fidelity of the pixel product against `target`.
pub fn pulse_fidelity(system: &TwoLevelSystem, pulse: &PixelatedPulse, target: &Unitary2) -> f64 {
    gate_fidelity(&crate::dynamics::pixel_unitary(system, pulse), target)
}

/// Exact gradient of `|Tr(target^dagger U)|^2 / 4` with respect to each
/// pixel amplitude; the first and last `buffer_pixels` entries are zero.
pub fn grape_gradient(
    system: &TwoLevelSystem,
    pulse: &PixelatedPulse,
    target: &Unitary2,
    buffer_pixels: usize,
) -> Result<Vec<f64>> {
    pulse.validate()?;
    Ok(fidelity_and_gradient(system, &pulse.values, pulse.dt, target, buffer_pixels).1)
}

fn fidelity_and_gradient(
    system: &TwoLevelSystem,
    values: &[f64],
    dt: f64,
    target: &Unitary2,
    buffer: usize,
) -> (f64, Vec<f64>) {
    let n = values.len();
    let half_delta = 0.5 * system.delta;
    let pairs: Vec<(Unitary2, Unitary2)> = values
        .iter()
        .map(|&e| exp_zx_derivative(0.5 * e, half_delta, dt))
        .collect();
    // prefix[j] = U_j ... U_1 (exclusive of pixel j)
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(Unitary2::identity());
    for (u, _) in &pairs {
        let next = *u * *prefix.last().expect("non-empty");
        prefix.push(next);
    }
    let total = prefix[n];
    let o = overlap(&total, target);
    let fidelity = o.norm_sqr() / 4.0;
    let td = target.dagger();

    let mut grad = vec![0.0; n];
    // suffix = target^dagger U_N ... U_{j+1}
    let mut suffix = td;
    for j in (0..n).rev() {
        if j >= buffer && j + buffer < n {
            let m = prefix[j] * suffix;
            // d/d eps = (1/2) d/da
            let d_overlap = trace_product(&m, &pairs[j].1) * 0.5;
            grad[j] = 0.5 * (o.conj() * d_overlap).re;
        }
        suffix = suffix * pairs[j].0;
    }
    (fidelity, grad)
}

/// `Tr(a b)`.
fn trace_product(a: &Unitary2, b: &Unitary2) -> Complex64 {
    a.u00 * b.u00 + a.u01 * b.u10 + a.u10 * b.u01 + a.u11 * b.u11
}

/// Gradient ascent on the gate overlap fidelity with a backtracking step.
///
/// Each iteration moves along the (optionally conjugated) gradient. A step
/// that does not raise the fidelity is rejected and the rate halved; once one
/// is accepted the rate keeps doubling while that still helps, then grows by
/// 10% for the next iteration. The fidelity history never decreases. With
/// `smoothing_sigma` set, each update direction is Gaussian-smoothed, and the
/// accumulated correction gets one final smoothing pass that is kept only if
/// it does not lower the fidelity. Buffer pixels are never modified.
/// `best_value` and `value_history` hold `1 - fidelity`.
pub fn grape_optimize(
    system: &TwoLevelSystem,
    initial: &PixelatedPulse,
    target: &Unitary2,
    config: &GrapeConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    initial.validate()?;
    if initial.len() != config.pixel_count {
        return Err(Error::validation(
            "pixel_count",
            format!("initial pulse has {} pixels, config expects {}", initial.len(), config.pixel_count),
        ));
    }
    let n = initial.len();
    let buffer = config.buffer_pixels;
    let dt = initial.dt;
    let sigma_px = config.smoothing_sigma.map(|s| s / dt);

    let mut values = initial.values.clone();
    let (mut fidelity, mut grad) = fidelity_and_gradient(system, &values, dt, target, buffer);
    let mut history = vec![1.0 - fidelity];
    let mut rate = config.learning_rate;
    let mut iterations = 0;
    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;

    while iterations < config.max_iterations && 1.0 - fidelity > config.target_error {
        let mut ascent = match sigma_px {
            Some(s) => gaussian_smooth_values(&grad, s),
            None => grad.clone(),
        };
        pin(&mut ascent, buffer);
        if ascent.iter().all(|g| *g == 0.0) {
            break;
        }
        let mut direction = ascent.clone();
        if config.conjugate {
            if let Some((old_ascent, old_dir)) = &previous {
                let num: f64 = ascent.iter().zip(old_ascent).map(|(g, h)| g * (g - h)).sum();
                let den: f64 = old_ascent.iter().map(|h| h * h).sum();
                let beta = (num / den).max(0.0);
                if beta.is_finite() {
                    for (d, o) in direction.iter_mut().zip(old_dir) {
                        *d += beta * o;
                    }
                }
                if dot(&direction, &ascent) <= 0.0 {
                    direction.clone_from(&ascent);
                }
            }
        }
        iterations += 1;
        let step = |r: f64| -> (f64, Vec<f64>) {
            let trial: Vec<f64> = values.iter().zip(&direction).map(|(u, g)| u + r * g).collect();
            (fidelity_and_gradient(system, &trial, dt, target, n).0, trial)
        };
        let mut accepted: Option<(f64, Vec<f64>)> = None;
        while rate > MIN_LEARNING_RATE {
            let (f, trial) = step(rate);
            if f > fidelity {
                accepted = Some((f, trial));
                break;
            }
            rate *= 0.5;
        }
        let Some((mut f, mut trial)) = accepted else {
            break;
        };
        // keep doubling while it still pays
        loop {
            let (f2, t2) = step(2.0 * rate);
            if !(f2 > f) {
                break;
            }
            rate *= 2.0;
            f = f2;
            trial = t2;
        }
        let (f, g) = fidelity_and_gradient(system, &trial, dt, target, buffer);
        previous = Some((ascent, direction));
        values = trial;
        fidelity = f;
        grad = g;
        rate *= 1.1;
        history.push(1.0 - fidelity);
    }

    if let Some(s) = sigma_px {
        let correction: Vec<f64> = values.iter().zip(&initial.values).map(|(u, u0)| u - u0).collect();
        let mut smoothed = gaussian_smooth_values(&correction, s);
        pin(&mut smoothed, buffer);
        let trial: Vec<f64> = initial.values.iter().zip(&smoothed).map(|(u0, c)| u0 + c).collect();
        let f = fidelity_and_gradient(system, &trial, dt, target, n).0;
        if f >= fidelity {
            values = trial;
            fidelity = f;
            *history.last_mut().expect("history starts non-empty") = 1.0 - fidelity;
        }
    }
    if !fidelity.is_finite() {
        return Err(Error::Numeric("GRAPE produced a non-finite fidelity".into()));
    }
    let error = 1.0 - fidelity;
    Ok(OptimizationResult {
        best_parameters: values.clone(),
        best_pulse: Some(PixelatedPulse::new(values, dt, initial.start)?),
        best_value: error,
        iterations_used: iterations,
        converged: error <= config.target_error,
        value_history: history,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pin(v: &mut [f64], buffer: usize) {
    let n = v.len();
    for (i, x) in v.iter_mut().enumerate() {
        if i < buffer || i + buffer >= n {
            *x = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{pixel_unitary, OscillatingSweep, PulseWaveform};

    #[test]
    fn derivative_matches_finite_difference() {
        for &(a, b, tau) in &[(0.3, 0.5, 0.7), (12.0, 0.5, 0.04), (1e-5, 1e-5, 0.3), (-4.0, 2.0, 1.1), (0.0, 1.0, 0.5)] {
            let (_, du) = exp_zx_derivative(a, b, tau);
            let h = 1e-6;
            let plus = Unitary2::exp_zx(a + h, b, tau);
            let minus = Unitary2::exp_zx(a - h, b, tau);
            let fd = plus.add(&minus.scale(Complex64::new(-1.0, 0.0))).scale(Complex64::new(0.5 / h, 0.0));
            assert!(du.max_abs_diff(&fd) < 1e-8, "a={a} b={b} tau={tau}");
        }
    }

    #[test]
    fn diagonal_closed_form() {
        let sys = TwoLevelSystem::uncoupled();
        let px = PixelatedPulse::new(vec![0.4, -1.3, 2.2, 0.9, 3.1], 0.25, 0.0).unwrap();
        let g = grape_gradient(&sys, &px, &Unitary2::identity(), 0).unwrap();
        let theta: f64 = px.values.iter().sum::<f64>() * px.dt;
        for gj in g {
            assert!((gj + 0.5 * px.dt * theta.sin()).abs() < 1e-15);
        }
        let g = grape_gradient(&sys, &px, &Unitary2::identity(), 2).unwrap();
        assert_eq!(&g[..2], &[0.0, 0.0]);
        assert_eq!(&g[3..], &[0.0, 0.0]);
        assert!(g[2] != 0.0);
    }

    #[test]
    fn fidelity_one_is_stationary() {
        let sys = TwoLevelSystem::new(1.0).unwrap();
        let px = PixelatedPulse::new(vec![0.7, -0.2, 1.5, 0.3], 0.3, 0.0).unwrap();
        let target = pixel_unitary(&sys, &px);
        let g = grape_gradient(&sys, &px, &target, 0).unwrap();
        assert!(g.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-8);
        let cfg = GrapeConfig {
            pixel_count: 4,
            buffer_pixels: 0,
            ..Default::default()
        };
        let r = grape_optimize(&sys, &px, &target, &cfg).unwrap();
        assert!(r.converged && r.iterations_used == 0);
        assert_eq!(r.best_pulse.unwrap().values, px.values);
    }

    #[test]
    fn ascent_is_monotone_and_buffers_stay_put() {
        let sys = TwoLevelSystem::new(1.0).unwrap();
        let sweep = PulseWaveform::from(OscillatingSweep::linear(3.0));
        let px = sweep.pixelate(64, -3.0, 3.0).unwrap();
        let cfg = GrapeConfig {
            pixel_count: 64,
            max_iterations: 300,
            target_error: 1e-9,
            smoothing_sigma: Some(0.2),
            ..Default::default()
        };
        let r = grape_optimize(&sys, &px, &Unitary2::sigma_x(), &cfg).unwrap();
        assert!(r.value_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.best_value < r.value_history[0]);
        let out = r.best_pulse.unwrap();
        assert_eq!(&out.values[..3], &px.values[..3]);
        assert_eq!(&out.values[61..], &px.values[61..]);
    }

    #[test]
    fn config_checks() {
        let sys = TwoLevelSystem::new(1.0).unwrap();
        let px = PixelatedPulse::new(vec![0.0; 6], 0.1, 0.0).unwrap();
        let cfg = GrapeConfig {
            pixel_count: 6,
            ..Default::default()
        };
        assert!(matches!(
            grape_optimize(&sys, &px, &Unitary2::identity(), &cfg),
            Err(Error::Validation { .. })
        ));
        let cfg = GrapeConfig {
            pixel_count: 8,
            ..Default::default()
        };
        assert!(grape_optimize(&sys, &px, &Unitary2::identity(), &cfg).is_err());
    }
}
