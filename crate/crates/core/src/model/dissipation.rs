//! Time-dependent cavity loss rate of the Jaynes-Cummings-like dissipator.
//!
//! With `d^2 = m^2 - 2 m kappa0` the unclipped rate is
//!
//! ```text
//! kappa(t) = 2 m kappa0 sinh(t d / 2) / (d cosh(t d / 2) + m sinh(t d / 2))
//! ```
//!
//! for `m > 2 kappa0` (Markovian), the same expression with `sin`/`cos` and
//! `|d|` for `m < 2 kappa0` (non-Markovian), and its `d -> 0` limit
//! `2 m kappa0 t / (2 + m t)` on the boundary. Whenever the unclipped
//! magnitude reaches `kappa_max` the rate is replaced by the clip value.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Markovian,
    NonMarkovian,
    Critical,
    ConstantMarkovian,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Markovian => "markovian",
            Regime::NonMarkovian => "non_markovian",
            Regime::Critical => "critical",
            Regime::ConstantMarkovian => "constant_markovian",
        }
    }
}

/// What to return once `|kappa(t)| >= kappa_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipMode {
    /// Always `+kappa_max`, also when the rate diverges to minus infinity.
    #[default]
    Literal,
    /// `kappa_max` with the sign of the unclipped rate.
    SignPreserving,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `kappa(t) = kappa0` at all times (the `m -> infinity` limit).
    Constant,
    /// Lorentzian-bath rate with spectral width `m`.
    JaynesCummings { m: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationSchedule {
    pub kappa0: f64,
    pub kind: ScheduleKind,
    pub kappa_max: f64,
    #[serde(default)]
    pub clip: ClipMode,
}

impl DissipationSchedule {
    pub fn constant(kappa0: f64, kappa_max: f64) -> Result<Self> {
        let s = Self {
            kappa0,
            kind: ScheduleKind::Constant,
            kappa_max,
            clip: ClipMode::Literal,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn jaynes_cummings(kappa0: f64, m: f64, kappa_max: f64) -> Result<Self> {
        let s = Self {
            kappa0,
            kind: ScheduleKind::JaynesCummings { m },
            kappa_max,
            clip: ClipMode::Literal,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_clip(mut self, clip: ClipMode) -> Self {
        self.clip = clip;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let k0 = self.kappa0;
        match self.kind {
            // kappa0 = 0 is the closed (lossless) limit.
            ScheduleKind::Constant => {
                if !(k0 >= 0.0 && k0.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "kappa0 must be >= 0, got {k0}"
                    )));
                }
            }
            ScheduleKind::JaynesCummings { m } => {
                if !(k0 > 0.0 && k0.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "kappa0 must be > 0, got {k0}"
                    )));
                }
                if !(m > 0.0 && m.is_finite()) {
                    return Err(Error::InvalidParameter(format!("m must be > 0, got {m}")));
                }
            }
        }
        if !(self.kappa_max > k0) || self.kappa_max.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "kappa_max ({}) must exceed kappa0 ({k0})",
                self.kappa_max
            )));
        }
        Ok(())
    }

    pub fn m(&self) -> Option<f64> {
        match self.kind {
            ScheduleKind::Constant => None,
            ScheduleKind::JaynesCummings { m } => Some(m),
        }
    }

    pub fn regime(&self) -> Regime {
        match self.kind {
            ScheduleKind::Constant => Regime::ConstantMarkovian,
            ScheduleKind::JaynesCummings { m } => {
                let two_k0 = 2.0 * self.kappa0;
                if m > two_k0 {
                    Regime::Markovian
                } else if m < two_k0 {
                    Regime::NonMarkovian
                } else {
                    Regime::Critical
                }
            }
        }
    }

    /// `|d| = sqrt(|m^2 - 2 m kappa0|)`; zero for constant schedules.
    pub fn abs_d(&self) -> f64 {
        match self.kind {
            ScheduleKind::Constant => 0.0,
            // m (m - 2 kappa0) avoids cancellation near the boundary
            ScheduleKind::JaynesCummings { m } => (m * (m - 2.0 * self.kappa0)).abs().sqrt(),
        }
    }

    /// Long-time limit `2 m kappa0 / (d + m)` of the Markovian rate.
    pub fn markovian_limit(&self) -> Result<f64> {
        match (self.regime(), self.kind) {
            (Regime::Markovian, ScheduleKind::JaynesCummings { m }) => {
                Ok(2.0 * m * self.kappa0 / (self.abs_d() + m))
            }
            (Regime::ConstantMarkovian, _) => Ok(self.kappa0),
            (r, _) => Err(Error::Domain(format!(
                "no stationary rate in the {} regime",
                r.as_str()
            ))),
        }
    }

    /// Unclipped rate. Returns `None` exactly at a pole of the oscillatory branch.
    pub fn raw_kappa(&self, t: f64) -> Option<f64> {
        let k0 = self.kappa0;
        let m = match self.kind {
            ScheduleKind::Constant => return Some(k0),
            ScheduleKind::JaynesCummings { m } => m,
        };
        let value = match self.regime() {
            Regime::Markovian => {
                // tanh form of sinh / (d cosh + m sinh); no overflow at large t
                let d = self.abs_d();
                let u = 0.5 * t * d;
                // tanh(u) rounds to exactly 1.0 beyond u ~ 19.1
                let th = if u > 20.0 { 1.0 } else { u.tanh() };
                2.0 * m * k0 * th / (d + m * th)
            }
            Regime::NonMarkovian => {
                let d = self.abs_d();
                let (s, c) = (0.5 * t * d).sin_cos();
                let den = d * c + m * s;
                if den == 0.0 {
                    return None;
                }
                2.0 * m * k0 * s / den
            }
            Regime::Critical => 2.0 * m * k0 * t / (2.0 + m * t),
            Regime::ConstantMarkovian => unreachable!(),
        };
        if value.is_finite() {
            Some(value)
        } else {
            None
        }
    }

    fn clip_value(&self, raw: Option<f64>) -> f64 {
        match (self.clip, raw) {
            (ClipMode::SignPreserving, Some(v)) if v < 0.0 => -self.kappa_max,
            _ => self.kappa_max,
        }
    }

    /// Clipped rate at `t >= 0`.
    pub fn kappa_at(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kappa(t) requires t >= 0, got {t}"
            )));
        }
        Ok(self.kappa_unchecked(t))
    }

    /// Clipped rate without the `t >= 0` check, for the integrator's inner loop.
    #[inline]
    pub fn kappa_unchecked(&self, t: f64) -> f64 {
        match self.raw_kappa(t) {
            Some(v) if v.abs() < self.kappa_max => v,
            raw => self.clip_value(raw),
        }
    }

    /// Period `4 pi / |d|` of the oscillatory rate.
    pub fn nm_period(&self) -> Result<f64> {
        match self.regime() {
            Regime::NonMarkovian => Ok(4.0 * PI / self.abs_d()),
            r => Err(Error::Domain(format!(
                "the rate is not periodic in the {} regime",
                r.as_str()
            ))),
        }
    }

    /// `int_0^t kappa(s) ds` over the clipped rate.
    pub fn cumulative_kappa(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cumulative kappa requires t >= 0, got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        if self.regime() == Regime::ConstantMarkovian {
            return Ok(self.kappa_unchecked(0.0) * t);
        }
        // Panels short enough that each holds at most a couple of clip kinks.
        let scale = match self.regime() {
            Regime::NonMarkovian => self.nm_period()? / 64.0,
            _ => 1.0 / (self.abs_d().max(self.kappa0) + 1.0),
        };
        let panels = ((t / scale).ceil() as usize).clamp(1, 1 << 20);
        let h = t / panels as f64;
        let f = |s: f64| self.kappa_unchecked(s);
        let tol = 1e-11 * t.max(1.0) / panels as f64;
        Ok((0..panels)
            .map(|i| {
                let a = i as f64 * h;
                let b = if i + 1 == panels { t } else { a + h };
                adaptive_simpson(&f, a, b, tol, 40)
            })
            .sum())
    }
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let c = 0.5 * (a + b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let (l, r) = (0.5 * (a + c), 0.5 * (c + b));
    let (fl, fr) = (f(l), f(r));
    let left = (c - a) / 6.0 * (fa + 4.0 * fl + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fr + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, c, fa, fc, fl, left, 0.5 * tol, depth - 1)
        + simpson_step(f, c, b, fc, fb, fr, right, 0.5 * tol, depth - 1)
}
