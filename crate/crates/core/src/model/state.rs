use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Mean-field variables of the driven open Dicke model.
///
/// `x` and `p` are the cavity quadratures scaled by `sqrt(2 N omega)`,
/// `jx`, `jy`, `jz` the collective spin per atom.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub x: f64,
    pub p: f64,
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
}

impl MeanFieldState {
    pub const DIM: usize = 5;

    pub const fn new(x: f64, p: f64, jx: f64, jy: f64, jz: f64) -> Self {
        Self { x, p, jx, jy, jz }
    }

    /// The normal (non-superradiant) state: empty cavity, spin down.
    pub const fn normal() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0, -1.0)
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.x, self.p, self.jx, self.jy, self.jz]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub fn spin_norm(&self) -> f64 {
        (self.jx * self.jx + self.jy * self.jy + self.jz * self.jz).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max-norm distance.
    pub fn dist(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn euclid(&self, other: &Self) -> f64 {
        let d = (*self - *other).to_array();
        d.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Image under the mean-field Z2 parity: (x, p, jx, jy) change sign.
    pub fn parity(&self) -> Self {
        Self::new(-self.x, -self.p, -self.jx, -self.jy, self.jz)
    }
}

impl Add for MeanFieldState {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.x + o.x,
            self.p + o.p,
            self.jx + o.jx,
            self.jy + o.jy,
            self.jz + o.jz,
        )
    }
}

impl Sub for MeanFieldState {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(
            self.x - o.x,
            self.p - o.p,
            self.jx - o.jx,
            self.jy - o.jy,
            self.jz - o.jz,
        )
    }
}

impl Mul<MeanFieldState> for f64 {
    type Output = MeanFieldState;
    fn mul(self, s: MeanFieldState) -> MeanFieldState {
        MeanFieldState::new(
            self * s.x,
            self * s.p,
            self * s.jx,
            self * s.jy,
            self * s.jz,
        )
    }
}
