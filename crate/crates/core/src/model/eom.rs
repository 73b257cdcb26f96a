//! Mean-field equations of motion and their superradiant fixed points.

use serde::{Deserialize, Serialize};

use super::drive::{critical_coupling, ModelFrequencies};
use super::state::MeanFieldState;
use crate::error::{Error, Result};

/// Which sign/factor convention of the mean-field equations to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EomVariant {
    /// Convention under which the closed-form superradiant states and the
    /// critical coupling are exact fixed points:
    ///
    /// ```text
    /// dj/dt = (-omega0 e_z - 2 lambda sqrt(2 omega) x e_x) x j
    /// dx/dt = p - kappa x / 2
    /// dp/dt = -omega^2 x - kappa p / 2 - lambda sqrt(2 omega) jx
    /// ```
    #[default]
    Consistent,
    /// The equations exactly as usually printed, with `+2 lambda sqrt(2 omega) x e_x`
    /// in the spin torque and `-2 lambda sqrt(2 omega) x jx` in `dp/dt`.
    LiteralAppendixA,
}

impl EomVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            EomVariant::Consistent => "consistent",
            EomVariant::LiteralAppendixA => "literal_appendix_a",
        }
    }
}

/// Time derivative of the mean-field state at coupling `lambda` and loss rate `kappa`.
#[inline]
pub fn eom_rhs(
    s: &MeanFieldState,
    lambda: f64,
    freqs: &ModelFrequencies,
    kappa: f64,
    variant: EomVariant,
) -> MeanFieldState {
    EomKernel::new(freqs, variant).rhs(s, lambda, kappa)
}

/// [`eom_rhs`] with the frequency-dependent constants hoisted out.
#[derive(Debug, Clone, Copy)]
pub struct EomKernel {
    sqrt_2omega: f64,
    omega_sq: f64,
    omega0: f64,
    variant: EomVariant,
}

impl EomKernel {
    pub fn new(freqs: &ModelFrequencies, variant: EomVariant) -> Self {
        Self {
            sqrt_2omega: (2.0 * freqs.omega).sqrt(),
            omega_sq: freqs.omega * freqs.omega,
            omega0: freqs.omega0,
            variant,
        }
    }

    #[inline]
    pub fn rhs(&self, s: &MeanFieldState, lambda: f64, kappa: f64) -> MeanFieldState {
        let g = lambda * self.sqrt_2omega;
        let (field_x, push) = match self.variant {
            EomVariant::Consistent => (-2.0 * g * s.x, -g * s.jx),
            EomVariant::LiteralAppendixA => (2.0 * g * s.x, -2.0 * g * s.x * s.jx),
        };
        let field_z = -self.omega0;
        // (field_x, 0, field_z) x j
        MeanFieldState {
            x: s.p - 0.5 * kappa * s.x,
            p: -self.omega_sq * s.x - 0.5 * kappa * s.p + push,
            jx: -field_z * s.jy,
            jy: field_z * s.jx - field_x * s.jz,
            jz: field_x * s.jy,
        }
    }
}

/// One of the two symmetry-broken steady states at constant coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }
}

/// Closed-form superradiant steady state for `lambda0 > lambda_c`.
pub fn steady_state_closed_form(
    lambda0: f64,
    freqs: &ModelFrequencies,
    kappa0: f64,
    branch: Branch,
) -> Result<MeanFieldState> {
    let lc = critical_coupling(freqs.omega, freqs.omega0, kappa0)?;
    if !(lambda0 > lc) {
        return Err(Error::Domain(format!(
            "no symmetry-broken steady state for lambda0 = {lambda0} <= lambda_c = {lc}"
        )));
    }
    steady_state_unchecked(lambda0, freqs, kappa0, branch)
}

/// Same as [`steady_state_closed_form`] but continuous down to `lambda0 = lambda_c`,
/// where it returns the normal state. Below `lambda_c` the square root is clamped.
pub fn steady_state_unchecked(
    lambda0: f64,
    freqs: &ModelFrequencies,
    kappa0: f64,
    branch: Branch,
) -> Result<MeanFieldState> {
    let lc = critical_coupling(freqs.omega, freqs.omega0, kappa0)?;
    let ratio2 = (lc / lambda0).powi(2);
    let order = (1.0 - ratio2 * ratio2).max(0.0);
    let sgn = branch.sign();
    let x = -sgn * lambda0 * (2.0 * freqs.omega * order).sqrt()
        / (freqs.omega * freqs.omega + 0.25 * kappa0 * kappa0);
    Ok(MeanFieldState {
        x,
        p: 0.5 * kappa0 * x,
        jx: sgn * order.sqrt(),
        jy: 0.0,
        jz: -ratio2,
    })
}

/// Max-norm of the equations of motion at constant `lambda0`, `kappa0`.
pub fn steady_state_residual(
    state: &MeanFieldState,
    lambda0: f64,
    freqs: &ModelFrequencies,
    kappa0: f64,
    variant: EomVariant,
) -> f64 {
    eom_rhs(state, lambda0, freqs, kappa0, variant).max_abs()
}
