use num_complex::Complex64;

use super::unitary::{State2, Unitary2};
use crate::error::{Error, Result};

/// Landau-Zener transition probability `1 - exp(-pi delta^2 / 2v)` for a
/// linear sweep of rate `v` through a gap `delta`.
pub fn lz_probability(delta: f64, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::domain(format!("sweep rate must be positive, got {v}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::domain(format!("gap must be non-negative, got {delta}")));
    }
    Ok(-(-std::f64::consts::PI * delta * delta / (2.0 * v)).exp_m1())
}

/// Gate overlap `|Tr(target^dagger u)|^2 / 4`; blind to global phase.
pub fn gate_fidelity(u: &Unitary2, target: &Unitary2) -> f64 {
    overlap(u, target).norm_sqr() / 4.0
}

/// `Tr(target^dagger u)`.
pub fn overlap(u: &Unitary2, target: &Unitary2) -> Complex64 {
    target.u00.conj() * u.u00
        + target.u10.conj() * u.u10
        + target.u01.conj() * u.u01
        + target.u11.conj() * u.u11
}

/// Population-transfer fidelity `(|u01|^2 + |u10|^2) / 2`.
pub fn phase_insensitive_fidelity(u: &Unitary2) -> f64 {
    0.5 * (u.u01.norm_sqr() + u.u10.norm_sqr())
}

/// Population left in `|0>` after starting in `|1>`: `|<0|U|1>|^2`.
pub fn survival_error(u: &Unitary2) -> f64 {
    u.u01.norm_sqr()
}

/// Upper eigenvector of `eps sigma_z / 2 + delta sigma_x / 2`,
/// `(cos(theta/2), sin(theta/2))` with `theta = atan2(delta, eps)`.
pub fn upper_eigenstate(eps: f64, delta: f64) -> State2 {
    let half = 0.5 * delta.atan2(eps);
    [Complex64::new(half.cos(), 0.0), Complex64::new(half.sin(), 0.0)]
}

/// Probability of following the upper adiabatic level from `eps_start` to
/// `eps_end`.
///
/// For a sweep whose endpoints lie far from the crossing this converges to
/// [`survival_error`] without the finite-time ringing of the bare basis, and
/// equals [`lz_probability`] for an infinite linear sweep.
pub fn adiabatic_transfer(u: &Unitary2, eps_start: f64, eps_end: f64, delta: f64) -> f64 {
    let a = u.apply(&upper_eigenstate(eps_start, delta));
    let b = upper_eigenstate(eps_end, delta);
    (b[0].conj() * a[0] + b[1].conj() * a[1]).norm_sqr()
}
