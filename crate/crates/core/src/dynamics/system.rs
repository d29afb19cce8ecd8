use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `H(t) = eps(t) sigma_z / 2 + delta sigma_x / 2` with `hbar = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelSystem {
    pub delta: f64,
}

impl TwoLevelSystem {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::domain(format!("gap must be positive, got {delta}")));
        }
        Ok(TwoLevelSystem { delta })
    }

    /// Zero coupling. Bare states never mix; used as a degenerate test case.
    pub fn uncoupled() -> Self {
        TwoLevelSystem { delta: 0.0 }
    }
}
