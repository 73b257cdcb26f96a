use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dissipation::DissipationSchedule;
use crate::error::{Error, Result};

/// Additive fluctuations `a0 f(t)` on top of the clipped rate, with `f`
/// piecewise constant and redrawn uniformly from `[-1, 1]` every
/// `resample_interval`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSettings {
    pub a0: f64,
    pub seed: u64,
    /// `None` resamples on every integrator step.
    pub resample_interval: Option<f64>,
}

impl NoiseSettings {
    pub fn new(a0: f64, seed: u64) -> Result<Self> {
        let n = Self {
            a0,
            seed,
            resample_interval: None,
        };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a0 >= 0.0 && self.a0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "a0 must be >= 0, got {}",
                self.a0
            )));
        }
        if let Some(dt) = self.resample_interval {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "resample interval must be > 0, got {dt}"
                )));
            }
        }
        Ok(())
    }
}

/// Sequential draw stream for `f(t)`.
///
/// The k-th draw of a `ChaCha8Rng` seeded with `seed` is the value of `f` on
/// `[k dt, (k + 1) dt)`.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    interval: f64,
    /// Index of the interval whose value is cached in `value`.
    index: Option<u64>,
    value: f64,
}

impl NoiseStream {
    pub fn new(seed: u64, interval: f64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            interval,
            index: None,
            value: 0.0,
        }
    }

    pub fn interval(&self) -> f64 {
        self.interval
    }

    /// Value on interval `k`. Intervals must be requested in nondecreasing order.
    pub fn value_for_interval(&mut self, k: u64) -> Result<f64> {
        let next = match self.index {
            Some(i) if k == i => return Ok(self.value),
            Some(i) if k < i => {
                return Err(Error::InvalidParameter(format!(
                    "noise stream is forward-only (at interval {i}, requested {k})"
                )))
            }
            Some(i) => i + 1,
            None => 0,
        };
        for _ in next..=k {
            self.value = self.rng.gen_range(-1.0..=1.0);
        }
        self.index = Some(k);
        Ok(self.value)
    }

    pub fn value_at(&mut self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise requires t >= 0, got {t}"
            )));
        }
        self.value_for_interval((t / self.interval).floor() as u64)
    }
}

/// `kappa(t) + a0 f(t)`, noise added after clipping.
pub fn noisy_kappa_at(
    t: f64,
    schedule: &DissipationSchedule,
    noise: &NoiseSettings,
    stream: &mut NoiseStream,
) -> Result<f64> {
    let base = schedule.kappa_at(t)?;
    if noise.a0 == 0.0 {
        return Ok(base);
    }
    Ok(base + noise.a0 * stream.value_at(t)?)
}

/// `samples` evenly spaced values of the (optionally noisy) rate on `[0, span]`.
///
/// Without an explicit resample interval the noise is redrawn every
/// `default_interval` (the integrator step of the run being inspected).
pub fn kappa_trace(
    schedule: &DissipationSchedule,
    noise: Option<&NoiseSettings>,
    default_interval: f64,
    span: f64,
    samples: usize,
) -> Result<Vec<(f64, f64)>> {
    if samples < 2 || !(span > 0.0 && span.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need span > 0 and at least 2 samples (span {span}, samples {samples})"
        )));
    }
    let mut stream =
        noise.map(|n| NoiseStream::new(n.seed, n.resample_interval.unwrap_or(default_interval)));
    (0..samples)
        .map(|i| {
            let t = span * i as f64 / (samples - 1) as f64;
            let k = match (noise, stream.as_mut()) {
                (Some(n), Some(st)) => noisy_kappa_at(t, schedule, n, st)?,
                _ => schedule.kappa_at(t)?,
            };
            Ok((t, k))
        })
        .collect()
}
