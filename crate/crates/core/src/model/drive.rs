use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square-wave coupling protocol: `lambda0` during the first half of every
/// period, zero during the second half.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveProtocol {
    pub lambda0: f64,
    pub omega_t: f64,
    pub period: f64,
    pub epsilon: f64,
}

impl DriveProtocol {
    pub fn new(lambda0: f64, omega_t: f64, epsilon: f64) -> Result<Self> {
        if !(lambda0 >= 0.0 && lambda0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda0 must be >= 0, got {lambda0}"
            )));
        }
        if !(omega_t > 0.0 && omega_t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega_T must be > 0, got {omega_t}"
            )));
        }
        if !epsilon.is_finite() || epsilon.abs() >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "|epsilon| must be < 1, got {epsilon}"
            )));
        }
        Ok(Self {
            lambda0,
            omega_t,
            period: TAU / omega_t,
            epsilon,
        })
    }

    /// Protocol with a prescribed period; `omega_t = 2 pi / period`.
    pub fn with_period(lambda0: f64, period: f64, epsilon: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "drive period must be > 0, got {period}"
            )));
        }
        let mut d = Self::new(lambda0, TAU / period, epsilon)?;
        d.period = period;
        Ok(d)
    }

    pub fn frequencies(&self) -> ModelFrequencies {
        ModelFrequencies::detuned(self.omega_t, self.epsilon)
    }

    /// Coupling at time `t`; values of `t` below zero are folded into the period.
    ///
    /// Phases within `1e-12` of a switching time count as the switching time.
    pub fn lambda_at(&self, t: f64) -> f64 {
        const SNAP: f64 = 1e-12;
        let mut phase = (t / self.period).rem_euclid(1.0);
        if 1.0 - phase < SNAP {
            phase = 0.0;
        }
        if phase < 0.5 - SNAP {
            self.lambda0
        } else {
            0.0
        }
    }
}

/// Cavity and atomic frequencies, detuned symmetrically around `omega_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelFrequencies {
    pub omega: f64,
    pub omega0: f64,
}

impl ModelFrequencies {
    pub fn detuned(omega_t: f64, epsilon: f64) -> Self {
        Self {
            omega: (1.0 - epsilon) * omega_t,
            omega0: (1.0 + epsilon) * omega_t,
        }
    }

    pub fn resonant(omega: f64) -> Self {
        Self {
            omega,
            omega0: omega,
        }
    }
}

/// Critical coupling of the superradiant transition with cavity loss `kappa0`.
pub fn critical_coupling(omega: f64, omega0: f64, kappa0: f64) -> Result<f64> {
    if !(omega > 0.0 && omega0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "frequencies must be positive (omega = {omega}, omega0 = {omega0})"
        )));
    }
    Ok(0.5 * ((omega0 / omega) * (omega * omega + 0.25 * kappa0 * kappa0)).sqrt())
}
