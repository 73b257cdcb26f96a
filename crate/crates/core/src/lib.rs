//! Mean-field simulation of the periodically driven open Dicke model with
//! Markovian, non-Markovian and noisy cavity loss, together with the
//! stroboscopic phase classifier and the parameter-sweep driver built on it.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod integrator;
pub mod io;
pub mod model;
pub mod presets;
pub mod sweep;

pub use analysis::{
    classify, detect_period, geometry_estimate, intra_period_variance, parity_pairing_check,
    Diagnostics, PhaseKind, PhaseLabel, Thresholds,
};
pub use error::{Error, Result};
pub use integrator::{
    relax_to_steady_state, rk4_step, simulate, InitialCondition, RelaxOptions, Sample,
    SimulationConfig, StroboPoint, StroboscopicSequence, Trajectory,
};
pub use model::*;
