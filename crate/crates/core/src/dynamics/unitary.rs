use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A two-component state vector in the bare basis `{|0>, |1>}`.
pub type State2 = [Complex64; 2];

/// Complex 2x2 matrix, row-major. Used for time-evolution operators, gate
/// targets and the Pauli algebra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Unitary2 {
    pub u00: Complex64,
    pub u01: Complex64,
    pub u10: Complex64,
    pub u11: Complex64,
}

impl Unitary2 {
    pub const fn new(u00: Complex64, u01: Complex64, u10: Complex64, u11: Complex64) -> Self {
        Unitary2 { u00, u01, u10, u11 }
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn sigma_x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn sigma_y() -> Self {
        Self::new(ZERO, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), ZERO)
    }

    pub const fn sigma_z() -> Self {
        Self::new(ONE, ZERO, ZERO, Complex64::new(-1.0, 0.0))
    }

    pub fn hadamard() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(h, h, h, -h)
    }

    /// Exact `exp(-i (a sigma_z + b sigma_x) tau)` for real `a`, `b`.
    ///
    /// With `r = sqrt(a^2 + b^2)` and `theta = r tau` this is
    /// `cos(theta) 1 - i sin(theta) (a sigma_z + b sigma_x) / r`; the `sin/r`
    /// factor is evaluated as `tau sinc(theta)` so that `r = 0` needs no branch.
    #[inline]
    pub fn exp_zx(a: f64, b: f64, tau: f64) -> Self {
        let r = a.hypot(b);
        let theta = r * tau;
        let (s, c) = theta.sin_cos();
        let k = tau * sinc(theta, s);
        let z = k * a;
        let x = k * b;
        Self::new(
            Complex64::new(c, -z),
            Complex64::new(0.0, -x),
            Complex64::new(0.0, -x),
            Complex64::new(c, z),
        )
    }

    pub fn dagger(&self) -> Self {
        Self::new(self.u00.conj(), self.u10.conj(), self.u01.conj(), self.u11.conj())
    }

    pub fn trace(&self) -> Complex64 {
        self.u00 + self.u11
    }

    pub fn det(&self) -> Complex64 {
        self.u00 * self.u11 - self.u01 * self.u10
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self::new(self.u00 * k, self.u01 * k, self.u10 * k, self.u11 * k)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.u00 + other.u00,
            self.u01 + other.u01,
            self.u10 + other.u10,
            self.u11 + other.u11,
        )
    }

    pub fn apply(&self, psi: &State2) -> State2 {
        [
            self.u00 * psi[0] + self.u01 * psi[1],
            self.u10 * psi[0] + self.u11 * psi[1],
        ]
    }

    /// Largest entrywise modulus of `U^dagger U - 1`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.dagger() * *self;
        max_abs_diff(&p, &Self::identity())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() < tol
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(self, other)
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.u00, self.u01, self.u10, self.u11]
    }

    /// Row-major `[re00, im00, re01, im01, re10, im10, re11, im11]`.
    pub fn to_interleaved(&self) -> [f64; 8] {
        let e = self.entries();
        [
            e[0].re, e[0].im, e[1].re, e[1].im, e[2].re, e[2].im, e[3].re, e[3].im,
        ]
    }

    pub fn from_interleaved(v: &[f64; 8]) -> Self {
        Self::new(
            Complex64::new(v[0], v[1]),
            Complex64::new(v[2], v[3]),
            Complex64::new(v[4], v[5]),
            Complex64::new(v[6], v[7]),
        )
    }
}

impl Default for Unitary2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    #[inline]
    fn mul(self, r: Unitary2) -> Unitary2 {
        Unitary2::new(
            self.u00 * r.u00 + self.u01 * r.u10,
            self.u00 * r.u01 + self.u01 * r.u11,
            self.u10 * r.u00 + self.u11 * r.u10,
            self.u10 * r.u01 + self.u11 * r.u11,
        )
    }
}

fn max_abs_diff(a: &Unitary2, b: &Unitary2) -> f64 {
    a.entries()
        .iter()
        .zip(b.entries().iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `sin(theta)/theta`, given `sin(theta)` already computed.
#[inline]
pub(crate) fn sinc(theta: f64, sin_theta: f64) -> f64 {
    if theta.abs() < 1e-4 {
        let t2 = theta * theta;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        sin_theta / theta
    }
}
