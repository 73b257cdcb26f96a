//! Fixed-step RK4 propagation with the drive switching times and noise
//! resample boundaries on the step grid.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    critical_coupling, eom_rhs, steady_state_closed_form, Branch, DissipationSchedule,
    DriveProtocol, EomKernel, EomVariant, MeanFieldState, ModelFrequencies, NoiseSettings,
    NoiseStream, Regime,
};

pub const DEFAULT_STEPS_PER_PERIOD: usize = 4096;
pub const DEFAULT_PERIODS_TOTAL: usize = 1000;
pub const DEFAULT_PERIODS_RECORDED: usize = 200;
pub const DEFAULT_NORM_TOLERANCE: f64 = 1e-6;
/// Components smaller than this are set to zero at period boundaries, which
/// keeps decaying states out of the subnormal range.
const FLUSH_BELOW: f64 = 1e-200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    State {
        state: MeanFieldState,
    },
    /// Closed-form superradiant state at `lambda0` and `kappa0`.
    SteadyState {
        branch: Branch,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub drive: DriveProtocol,
    pub schedule: DissipationSchedule,
    pub noise: Option<NoiseSettings>,
    pub variant: EomVariant,
    pub initial: InitialCondition,
    pub periods_total: usize,
    pub periods_recorded: usize,
    pub steps_per_period: usize,
    pub record_dense: bool,
    /// Keep every `dense_stride`-th step in the dense record.
    pub dense_stride: usize,
    pub norm_tolerance: f64,
}

impl SimulationConfig {
    pub fn new(drive: DriveProtocol, schedule: DissipationSchedule) -> Self {
        Self {
            drive,
            schedule,
            noise: None,
            variant: EomVariant::Consistent,
            initial: InitialCondition::SteadyState {
                branch: Branch::Plus,
            },
            periods_total: DEFAULT_PERIODS_TOTAL,
            periods_recorded: DEFAULT_PERIODS_RECORDED,
            steps_per_period: DEFAULT_STEPS_PER_PERIOD,
            record_dense: true,
            dense_stride: 1,
            norm_tolerance: DEFAULT_NORM_TOLERANCE,
        }
    }

    pub fn freqs(&self) -> ModelFrequencies {
        self.drive.frequencies()
    }

    pub fn step(&self) -> f64 {
        self.drive.period / self.steps_per_period as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        if self.steps_per_period < 2 || !self.steps_per_period.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "steps_per_period must be even and >= 2, got {}",
                self.steps_per_period
            )));
        }
        if self.periods_total == 0 {
            return Err(Error::InvalidParameter("periods_total must be >= 1".into()));
        }
        if self.periods_recorded > self.periods_total {
            return Err(Error::InvalidParameter(format!(
                "periods_recorded ({}) exceeds periods_total ({})",
                self.periods_recorded, self.periods_total
            )));
        }
        if self.dense_stride == 0 {
            return Err(Error::InvalidParameter("dense_stride must be >= 1".into()));
        }
        if !(self.norm_tolerance > 0.0) {
            return Err(Error::InvalidParameter("norm_tolerance must be > 0".into()));
        }
        self.noise_steps()?;
        Ok(())
    }

    /// Number of integrator steps per noise draw.
    pub fn noise_steps(&self) -> Result<u64> {
        let Some(dt) = self.noise.and_then(|n| n.resample_interval) else {
            return Ok(1);
        };
        let ratio = dt / self.step();
        let k = ratio.round();
        if k < 1.0 || (ratio - k).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "noise resample interval {dt} is not a positive multiple of the step {}",
                self.step()
            )));
        }
        Ok(k as u64)
    }

    /// Whether `lambda0` exceeds the critical coupling at `kappa0`.
    pub fn is_superradiant(&self) -> Result<bool> {
        let f = self.freqs();
        Ok(self.drive.lambda0 > critical_coupling(f.omega, f.omega0, self.schedule.kappa0)?)
    }

    pub fn initial_state(&self) -> Result<MeanFieldState> {
        match self.initial {
            InitialCondition::State { state } => Ok(state),
            InitialCondition::SteadyState { branch } => steady_state_closed_form(
                self.drive.lambda0,
                &self.freqs(),
                self.schedule.kappa0,
                branch,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: MeanFieldState,
    pub kappa: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorMeta {
    pub method: String,
    pub step: f64,
    pub noise_steps: u64,
    pub final_norm_drift: f64,
    pub max_norm_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub config: SimulationConfig,
    pub meta: IntegratorMeta,
}

impl Trajectory {
    pub fn is_dense(&self) -> bool {
        !self.samples.is_empty()
    }

    /// Samples with `t >= t_start`.
    pub fn window(&self, t_start: f64) -> &[Sample] {
        let i = self.samples.partition_point(|s| s.t < t_start);
        &self.samples[i..]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StroboPoint {
    pub n: usize,
    pub state: MeanFieldState,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StroboscopicSequence {
    pub points: Vec<StroboPoint>,
}

impl StroboscopicSequence {
    pub fn from_states(first: usize, states: impl IntoIterator<Item = MeanFieldState>) -> Self {
        Self {
            points: states
                .into_iter()
                .enumerate()
                .map(|(i, state)| StroboPoint {
                    n: first + i,
                    state,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = &MeanFieldState> + '_ {
        self.points.iter().map(|p| &p.state)
    }

    /// Drop the first `k` points.
    pub fn skip(&self, k: usize) -> Self {
        Self {
            points: self.points.iter().skip(k).copied().collect(),
        }
    }
}

/// Classical fourth-order Runge-Kutta step.
#[inline]
pub fn rk4_step<F>(state: &MeanFieldState, t: f64, h: f64, rhs: F) -> Result<MeanFieldState>
where
    F: Fn(f64, &MeanFieldState) -> MeanFieldState,
{
    let half = 0.5 * h;
    let k1 = rhs(t, state);
    let k2 = rhs(t + half, &(*state + half * k1));
    let k3 = rhs(t + half, &(*state + half * k2));
    let k4 = rhs(t + h, &(*state + h * k3));
    let next = *state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if !next.is_finite() {
        return Err(Error::NonFinite { t: t + h });
    }
    Ok(next)
}

/// [`rk4_step`] with the loss rate supplied per stage (start, midpoint, end).
#[inline]
fn rk4_staged<F>(
    state: &MeanFieldState,
    t: f64,
    h: f64,
    kappa: [f64; 3],
    rhs: F,
) -> Result<MeanFieldState>
where
    F: Fn(&MeanFieldState, f64) -> MeanFieldState,
{
    let half = 0.5 * h;
    let k1 = rhs(state, kappa[0]);
    let k2 = rhs(&(*state + half * k1), kappa[1]);
    let k3 = rhs(&(*state + half * k2), kappa[1]);
    let k4 = rhs(&(*state + h * k3), kappa[2]);
    let next = *state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if !next.is_finite() {
        return Err(Error::NonFinite { t: t + h });
    }
    Ok(next)
}

/// Loss rate at the RK4 stage times of one drive period, for schedules whose
/// period equals the drive period.
struct KappaTable {
    /// `kappa` at local times `j h / 2`, `j = 0..=2N`.
    half_steps: Vec<f64>,
}

impl KappaTable {
    fn build(config: &SimulationConfig) -> Option<Self> {
        let schedule = &config.schedule;
        if schedule.regime() != Regime::NonMarkovian {
            return None;
        }
        let t_nm = schedule.nm_period().ok()?;
        let period = config.drive.period;
        if (period - t_nm).abs() > 1e-12 * period {
            return None;
        }
        let h = config.step();
        let half_steps = (0..=2 * config.steps_per_period)
            .map(|j| schedule.kappa_unchecked(0.5 * h * j as f64))
            .collect();
        Some(Self { half_steps })
    }
}

/// Integrate the driven dynamics; returns the dense record of the last
/// `periods_recorded` periods (if requested) and the stroboscopic samples
/// at `t = nT` over the same window.
///
/// When the loss rate is periodic with exactly the drive period it is
/// tabulated once per run at the stage times of a single period.
pub fn simulate(config: &SimulationConfig) -> Result<(Trajectory, StroboscopicSequence)> {
    config.validate()?;
    let kernel = EomKernel::new(&config.freqs(), config.variant);
    let schedule = config.schedule;
    let n_steps = config.steps_per_period;
    let half_steps = n_steps / 2;
    let period = config.drive.period;
    let h = config.step();
    let lambda0 = config.drive.lambda0;
    let noise_steps = config.noise_steps()?;
    let a0 = config.noise.map_or(0.0, |n| n.a0);
    let mut stream = config
        .noise
        .map(|n| NoiseStream::new(n.seed, noise_steps as f64 * h));
    let table = KappaTable::build(config);

    let first_recorded = config.periods_total - config.periods_recorded;
    let mut state = config.initial_state()?;
    let norm0 = state.spin_norm();
    let mut max_drift = 0.0f64;

    let mut strobe = Vec::with_capacity(config.periods_recorded + 1);
    let mut samples = Vec::new();
    if config.record_dense {
        samples.reserve(config.periods_recorded * n_steps / config.dense_stride + 1);
    }

    for period_idx in 0..config.periods_total {
        let t0 = period_idx as f64 * period;
        let recording = period_idx >= first_recorded;
        if recording {
            strobe.push(StroboPoint {
                n: period_idx,
                state,
            });
        }
        for i in 0..n_steps {
            let t = t0 + i as f64 * h;
            let lambda = if i < half_steps { lambda0 } else { 0.0 };
            let fluct = match stream.as_mut() {
                Some(s) if a0 != 0.0 => {
                    let global = (period_idx * n_steps + i) as u64;
                    a0 * s.value_for_interval(global / noise_steps)?
                }
                _ => 0.0,
            };
            let step_kappa = match &table {
                Some(tab) => {
                    let k = &tab.half_steps[2 * i..2 * i + 3];
                    [k[0], k[1], k[2]]
                }
                None => [
                    schedule.kappa_unchecked(t),
                    schedule.kappa_unchecked(t + 0.5 * h),
                    schedule.kappa_unchecked(t + h),
                ],
            };
            if recording && config.record_dense && i % config.dense_stride == 0 {
                samples.push(Sample {
                    t,
                    state,
                    kappa: step_kappa[0] + fluct,
                    lambda,
                });
            }
            state = rk4_staged(&state, t, h, step_kappa.map(|k| k + fluct), |s, k| {
                kernel.rhs(s, lambda, k)
            })?;
        }
        state = flush_tiny(state);
        let t_end = (period_idx + 1) as f64 * period;
        let drift = (state.spin_norm() - norm0).abs();
        max_drift = max_drift.max(drift);
        if drift > config.norm_tolerance {
            return Err(Error::NormDrift {
                t: t_end,
                drift,
                tol: config.norm_tolerance,
            });
        }
    }

    let t_final = config.periods_total as f64 * period;
    strobe.push(StroboPoint {
        n: config.periods_total,
        state,
    });
    if config.record_dense && config.periods_recorded > 0 {
        let fluct = match stream.as_mut() {
            Some(s) if a0 != 0.0 => {
                let global = (config.periods_total * n_steps) as u64;
                a0 * s.value_for_interval(global / noise_steps)?
            }
            _ => 0.0,
        };
        samples.push(Sample {
            t: t_final,
            state,
            kappa: schedule.kappa_unchecked(t_final) + fluct,
            lambda: lambda0,
        });
    }

    let meta = IntegratorMeta {
        method: "rk4-fixed".to_string(),
        step: h,
        noise_steps,
        final_norm_drift: (state.spin_norm() - norm0).abs(),
        max_norm_drift: max_drift,
    };
    Ok((
        Trajectory {
            samples,
            config: config.clone(),
            meta,
        },
        StroboscopicSequence { points: strobe },
    ))
}

fn flush_tiny(s: MeanFieldState) -> MeanFieldState {
    MeanFieldState::from_array(
        s.to_array()
            .map(|v| if v.abs() < FLUSH_BELOW { 0.0 } else { v }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOptions {
    pub steps_per_period: usize,
    pub max_periods: usize,
    /// Convergence threshold on the max-norm of the time derivative.
    pub tol: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            steps_per_period: 1024,
            max_periods: 50_000,
            tol: 1e-12,
        }
    }
}

/// Integrate at constant coupling and loss until the state stops moving.
///
/// "Period" here is the bare cavity period `2 pi / omega`.
pub fn relax_to_steady_state(
    initial: &MeanFieldState,
    lambda0: f64,
    freqs: &ModelFrequencies,
    kappa0: f64,
    opts: RelaxOptions,
) -> Result<MeanFieldState> {
    let variant = EomVariant::Consistent;
    let rhs = |_t: f64, s: &MeanFieldState| eom_rhs(s, lambda0, freqs, kappa0, variant);
    let h = TAU / freqs.omega / opts.steps_per_period as f64;
    let mut state = *initial;
    let mut last_change = f64::INFINITY;
    for period_idx in 0..opts.max_periods {
        if rhs(0.0, &state).max_abs() < opts.tol {
            return Ok(state);
        }
        let start = state;
        for i in 0..opts.steps_per_period {
            let t = (period_idx * opts.steps_per_period + i) as f64 * h;
            state = rk4_step(&state, t, h, rhs)?;
        }
        last_change = state.dist(&start);
    }
    Err(Error::NotConverged {
        periods: opts.max_periods,
        last_change,
    })
}
