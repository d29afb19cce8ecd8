//! Drive waveforms `eps(t)` for the bias term of the two-level Hamiltonian.
//!
//! All analytic waveforms live on a symmetric interval centred on the
//! crossing, so `t = 0` is the moment the bare linear sweep passes `eps = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Switching window for the oscillation amplitude: constant in the middle,
/// linear ramps of length `switching` on each side, zero beyond
/// `|t| = (total + switching) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub total: f64,
    pub switching: f64,
}

impl Window {
    pub fn new(total: f64, switching: f64) -> Result<Self> {
        let w = Window { total, switching };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.switching > 0.0) || !self.switching.is_finite() {
            return Err(Error::domain(format!(
                "window switching time must be positive, got {}",
                self.switching
            )));
        }
        if !(self.total > self.switching) || !self.total.is_finite() {
            return Err(Error::domain(format!(
                "window total {} must exceed switching time {}",
                self.total, self.switching
            )));
        }
        Ok(())
    }

    /// Amplitude envelope relative to the plateau value, in `[0, 1]`.
    #[inline]
    pub fn envelope(&self, t: f64) -> f64 {
        let a = t.abs();
        let inner = 0.5 * (self.total - self.switching);
        let outer = 0.5 * (self.total + self.switching);
        if a < inner {
            1.0
        } else if a <= outer {
            (outer - a) / self.switching
        } else {
            0.0
        }
    }

    /// Half-width of the region where the oscillation is non-zero.
    pub fn half_extent(&self) -> f64 {
        0.5 * (self.total + self.switching)
    }
}

/// Linear sweep with an additive cosine, `v t + lambda(t) cos(omega t + phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatingSweep {
    pub v: f64,
    pub lambda_r: f64,
    pub omega: f64,
    pub phi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
}

impl OscillatingSweep {
    pub fn linear(v: f64) -> Self {
        OscillatingSweep {
            v,
            lambda_r: 0.0,
            omega: 0.0,
            phi: 0.0,
            window: None,
        }
    }

    #[inline]
    pub fn amplitude(&self, t: f64) -> f64 {
        match &self.window {
            Some(w) => self.lambda_r * w.envelope(t),
            None => self.lambda_r,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let lam = self.amplitude(t);
        if lam == 0.0 {
            self.v * t
        } else {
            self.v * t + lam * (self.omega * t + self.phi).cos()
        }
    }
}

/// Adiabatic seed pulse `-delta tan[(atan(delta/eps0) - pi/2) erf(l t) / erf(-l T/2)]`.
///
/// Runs from `+eps0` at `t = -T/2` through zero at `t = 0` to `-eps0` at `T/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErfTanSweep {
    pub eps0: f64,
    pub lambda_erf: f64,
    pub duration: f64,
    /// The gap the waveform is shaped around.
    pub delta: f64,
}

impl ErfTanSweep {
    pub fn new(eps0: f64, lambda_erf: f64, duration: f64, delta: f64) -> Result<Self> {
        for (name, x) in [
            ("eps0", eps0),
            ("lambda_erf", lambda_erf),
            ("duration", duration),
            ("delta", delta),
        ] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::domain(format!("erf-tan {name} must be positive, got {x}")));
            }
        }
        Ok(ErfTanSweep {
            eps0,
            lambda_erf,
            duration,
            delta,
        })
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let angle = (self.delta / self.eps0).atan() - std::f64::consts::FRAC_PI_2;
        let norm = erf(-self.lambda_erf * 0.5 * self.duration);
        -self.delta * (angle * erf(self.lambda_erf * t) / norm).tan()
    }
}

/// Piecewise-constant pulse: pixel `k` holds `values[k]` on
/// `[start + k dt, start + (k + 1) dt)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelatedPulse {
    pub values: Vec<f64>,
    pub dt: f64,
    #[serde(default)]
    pub start: f64,
}

impl PixelatedPulse {
    pub fn new(values: Vec<f64>, dt: f64, start: f64) -> Result<Self> {
        let p = PixelatedPulse { values, dt, start };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::domain("pixelated pulse needs at least one pixel"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::domain(format!("pixel duration must be positive, got {}", self.dt)));
        }
        if !self.start.is_finite() {
            return Err(Error::domain("pixelated pulse start time must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.values.len() as f64
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration()
    }

    /// Midpoint time of pixel `k`.
    pub fn pixel_time(&self, k: usize) -> f64 {
        self.start + (k as f64 + 0.5) * self.dt
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let x = (t - self.start) / self.dt;
        if !(x >= 0.0) || x >= self.values.len() as f64 {
            return Err(Error::domain(format!(
                "t = {t} outside pixelated pulse support [{}, {})",
                self.start,
                self.end()
            )));
        }
        Ok(self.values[x.floor() as usize])
    }

    /// Gaussian smoothing with width `sigma` (time units).
    ///
    /// The kernel is truncated at four widths; near the edges it is
    /// renormalized over the pixels that exist, so constants are fixed points.
    pub fn gaussian_smooth(&self, sigma: f64) -> Result<PixelatedPulse> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain(format!("smoothing width must be positive, got {sigma}")));
        }
        Ok(PixelatedPulse {
            values: gaussian_smooth_values(&self.values, sigma / self.dt),
            dt: self.dt,
            start: self.start,
        })
    }
}

/// Convolve `values` with a normalized Gaussian of width `sigma_px` pixels.
/// A non-positive width returns the input unchanged.
pub fn gaussian_smooth_values(values: &[f64], sigma_px: f64) -> Vec<f64> {
    if !(sigma_px > 0.0) {
        return values.to_vec();
    }
    let reach = (4.0 * sigma_px).floor() as isize;
    let kernel: Vec<f64> = (-reach..=reach)
        .map(|k| {
            let x = k as f64 / sigma_px;
            (-0.5 * x * x).exp()
        })
        .collect();
    let n = values.len() as isize;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            let mut weight = 0.0;
            for (j, w) in kernel.iter().enumerate() {
                let idx = i + j as isize - reach;
                if idx >= 0 && idx < n {
                    acc += w * values[idx as usize];
                    weight += w;
                }
            }
            acc / weight
        })
        .collect()
}

/// Drive waveform in one of its three representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseWaveform {
    LinearOscillating(OscillatingSweep),
    ErfTan(ErfTanSweep),
    Pixelated(PixelatedPulse),
}

impl PulseWaveform {
    pub fn validate(&self) -> Result<()> {
        match self {
            PulseWaveform::LinearOscillating(p) => {
                for (name, x) in [("v", p.v), ("lambda_r", p.lambda_r), ("omega", p.omega), ("phi", p.phi)] {
                    if !x.is_finite() {
                        return Err(Error::domain(format!("{name} must be finite")));
                    }
                }
                if let Some(w) = &p.window {
                    w.validate()?;
                }
                Ok(())
            }
            PulseWaveform::ErfTan(p) => ErfTanSweep::new(p.eps0, p.lambda_erf, p.duration, p.delta).map(|_| ()),
            PulseWaveform::Pixelated(p) => p.validate(),
        }
    }

    /// `eps(t)`. Erf-tan pulses are defined on `|t| <= T/2` and pixelated
    /// pulses on their pixel support; outside those a domain error results.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        match self {
            PulseWaveform::LinearOscillating(p) => Ok(p.eval(t)),
            PulseWaveform::ErfTan(p) => {
                let half = 0.5 * p.duration;
                if t.abs() > half * (1.0 + 1e-12) {
                    return Err(Error::domain(format!("t = {t} outside erf-tan support [-{half}, {half}]")));
                }
                Ok(p.eval(t))
            }
            PulseWaveform::Pixelated(p) => p.eval(t),
        }
    }

    /// Upper bound on `|eps(t)|` over `[t_start, t_end]`.
    pub fn max_abs_on(&self, t_start: f64, t_end: f64) -> f64 {
        match self {
            PulseWaveform::LinearOscillating(p) => {
                p.v.abs() * t_start.abs().max(t_end.abs()) + p.lambda_r.abs()
            }
            PulseWaveform::ErfTan(p) => p.eps0,
            PulseWaveform::Pixelated(p) => p.values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// Fastest intrinsic angular frequency other than the bias itself.
    pub fn drive_frequency(&self) -> f64 {
        match self {
            PulseWaveform::LinearOscillating(p) if p.lambda_r != 0.0 => p.omega.abs(),
            _ => 0.0,
        }
    }

    /// Sample onto `n` pixels over `[t_start, t_end]`, each pixel holding the
    /// value at its midpoint.
    pub fn pixelate(&self, n: usize, t_start: f64, t_end: f64) -> Result<PixelatedPulse> {
        if n == 0 {
            return Err(Error::domain("pixel count must be at least 1"));
        }
        if !(t_end > t_start) {
            return Err(Error::domain(format!("empty interval [{t_start}, {t_end}]")));
        }
        let dt = (t_end - t_start) / n as f64;
        let values = (0..n)
            .map(|k| self.evaluate(t_start + (k as f64 + 0.5) * dt))
            .collect::<Result<Vec<_>>>()?;
        PixelatedPulse::new(values, dt, t_start)
    }
}

impl From<OscillatingSweep> for PulseWaveform {
    fn from(p: OscillatingSweep) -> Self {
        PulseWaveform::LinearOscillating(p)
    }
}

impl From<ErfTanSweep> for PulseWaveform {
    fn from(p: ErfTanSweep) -> Self {
        PulseWaveform::ErfTan(p)
    }
}

impl From<PixelatedPulse> for PulseWaveform {
    fn from(p: PixelatedPulse) -> Self {
        PulseWaveform::Pixelated(p)
    }
}

/// Error function, accurate to a few ulps over the real line.
///
/// Series expansion for `|x| < 2.5`, continued fraction for `erfc` above.
pub fn erf(x: f64) -> f64 {
    let a = x.abs();
    let r = if a < 2.5 {
        // erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_{n>=0} 2^n x^(2n+1) / (1*3*...*(2n+1))
        let x2 = a * a;
        let mut term = a;
        let mut sum = a;
        let mut n = 0.0;
        while term > sum * 1e-17 {
            n += 1.0;
            term *= 2.0 * x2 / (2.0 * n + 1.0);
            sum += term;
        }
        std::f64::consts::FRAC_2_SQRT_PI * (-x2).exp() * sum
    } else if a < 27.0 {
        1.0 - erfc_cf(a)
    } else {
        1.0
    };
    r.copysign(x)
}

/// erfc(x) for x >= 2.5 via the Lentz continued fraction.
fn erfc_cf(x: f64) -> f64 {
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..300 {
        let an = k as f64 * 0.5;
        d = x + an * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = x + an / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (f * std::f64::consts::PI.sqrt())
}
