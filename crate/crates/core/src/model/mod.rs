//! Closed-form physics of the driven open Dicke model at mean-field level.

pub mod dissipation;
pub mod drive;
pub mod eom;
pub mod noise;
pub mod state;

pub use dissipation::{ClipMode, DissipationSchedule, Regime, ScheduleKind};
pub use drive::{critical_coupling, DriveProtocol, ModelFrequencies};
pub use eom::{
    eom_rhs, steady_state_closed_form, steady_state_residual, steady_state_unchecked, Branch,
    EomKernel, EomVariant,
};
pub use noise::{kappa_trace, noisy_kappa_at, NoiseSettings, NoiseStream};
pub use state::MeanFieldState;
