use serde::{Deserialize, Serialize};

use super::bessel::J0_FIRST_ZERO;
use super::jumps::MAX_GAP_TO_DRIVE_RATIO;
use crate::dynamics::{OscillatingSweep, Window};
use crate::error::{Error, Result};

/// Windowed sweep that cancels the central crossing and the `m = +-1` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiabaticDesign {
    pub pulse: OscillatingSweep,
    /// `(T - Ts)/2 - omega/v`; positive when the plateau covers both first-order jumps.
    pub inner_margin: f64,
    /// `2 omega/v - (T + Ts)/2`; positive when the drive is off before the second-order jumps.
    pub outer_margin: f64,
    /// `delta <= omega/25`.
    pub jumps_separated: bool,
}

impl DiabaticDesign {
    pub fn window(&self) -> Window {
        self.pulse.window.expect("designed pulses are windowed")
    }

    /// `T + Ts`, the full time the drive is on.
    pub fn drive_duration(&self) -> f64 {
        let w = self.window();
        w.total + w.switching
    }
}

/// Oscillation amplitude at the first zero of `J_0`, phase zero, and plateau
/// length `T = 3 omega / v`, the centre of the feasible interval
/// `2 omega/v + Ts < T < 4 omega/v - Ts`.
pub fn design_diabatic_pulse(v: f64, omega: f64, switching: f64, delta: f64) -> Result<DiabaticDesign> {
    if !(v > 0.0) || !(omega > 0.0) || !(switching > 0.0) {
        return Err(Error::domain("sweep rate, drive frequency and switching time must be positive"));
    }
    let total = 3.0 * omega / v;
    let inner_margin = 0.5 * (total - switching) - omega / v;
    let outer_margin = 2.0 * omega / v - 0.5 * (total + switching);
    let mut violated = Vec::new();
    if !(inner_margin > 0.0) {
        violated.push("(T - Ts)/2 > omega/v");
    }
    if !(outer_margin > 0.0) {
        violated.push("(T + Ts)/2 < 2 omega/v");
    }
    if !violated.is_empty() {
        return Err(Error::Design {
            constraint: format!("{} (Ts = {switching}, omega/v = {})", violated.join(" and "), omega / v),
        });
    }
    Ok(DiabaticDesign {
        pulse: OscillatingSweep {
            v,
            lambda_r: J0_FIRST_ZERO * omega,
            omega,
            phi: 0.0,
            window: Some(Window::new(total, switching)?),
        },
        inner_margin,
        outer_margin,
        jumps_separated: delta <= omega * MAX_GAP_TO_DRIVE_RATIO,
    })
}
