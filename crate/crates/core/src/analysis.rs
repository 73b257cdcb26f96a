//! Long-time phase classification from stroboscopic and dense records.
//!
//! The cascade is: exact period detection (tight tolerance), then a coarse
//! period pass for noisy or slowly breathing orbits, then point-cloud
//! geometry for aperiodic sequences.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{StroboscopicSequence, Trajectory};
use crate::model::MeanFieldState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "n", rename_all = "snake_case")]
pub enum PhaseKind {
    Tiss,
    Dtc,
    /// Stroboscopic period `n`; `n = 1` marks a drive-locked orbit that
    /// moves within each period, `n = 6` is the sextet.
    PeriodN(usize),
    LimitCycle,
    Thermal,
    Unresolved,
}

impl PhaseKind {
    pub fn label(&self) -> String {
        match self {
            PhaseKind::Tiss => "TISS".into(),
            PhaseKind::Dtc => "DTC".into(),
            PhaseKind::PeriodN(n) => format!("P{n}"),
            PhaseKind::LimitCycle => "LC".into(),
            PhaseKind::Thermal => "THERMAL".into(),
            PhaseKind::Unresolved => "UNRESOLVED".into(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "TISS" => PhaseKind::Tiss,
            "DTC" => PhaseKind::Dtc,
            "LC" => PhaseKind::LimitCycle,
            "THERMAL" => PhaseKind::Thermal,
            "UNRESOLVED" => PhaseKind::Unresolved,
            _ => PhaseKind::PeriodN(s.strip_prefix('P')?.parse().ok()?),
        })
    }
}

impl fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Max-norm tolerance for exact stroboscopic periodicity.
    pub period_tol: f64,
    /// Looser tolerance used when no exact period exists (noise, slow breathing).
    pub coarse_period_tol: f64,
    pub p_max: usize,
    pub tiss_variance: f64,
    /// Dense window (in drive periods) for the intra-period variance.
    pub variance_periods: usize,
    pub parity_tol: f64,
    pub lc_dim_lo: f64,
    pub lc_dim_hi: f64,
    pub lc_nn_spread: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            period_tol: 1e-3,
            coarse_period_tol: 0.15,
            p_max: 12,
            tiss_variance: 1e-3,
            variance_periods: 10,
            parity_tol: 1e-2,
            lc_dim_lo: 0.5,
            lc_dim_hi: 1.5,
            lc_nn_spread: 0.35,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub period: Option<usize>,
    /// The period was only found at the coarse tolerance.
    pub coarse: bool,
    /// Distinct stroboscopic clusters (the period, when one exists).
    pub clusters: usize,
    pub variance: Option<f64>,
    pub dimension: Option<f64>,
    pub nn_spread: Option<f64>,
    pub parity: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseLabel {
    pub kind: PhaseKind,
    pub diagnostics: Diagnostics,
}

/// Largest over the window of `|s_{n+p} - s_n|` (max-norm).
pub fn period_mismatch(states: &[MeanFieldState], p: usize) -> f64 {
    states
        .windows(p + 1)
        .map(|w| w[p].dist(&w[0]))
        .fold(0.0, f64::max)
}

/// Smallest `p <= p_max` with `|s_{n+p} - s_n| < tol` over the whole sequence.
pub fn detect_period(
    points: &StroboscopicSequence,
    tol: f64,
    p_max: usize,
) -> Result<Option<usize>> {
    if p_max == 0 || !(tol > 0.0) {
        return Err(Error::Record(format!(
            "invalid period search (tol {tol}, p_max {p_max})"
        )));
    }
    if points.len() < 4 * p_max {
        return Err(Error::Record(format!(
            "stroboscopic window of {} points is shorter than 4 * p_max = {}",
            points.len(),
            4 * p_max
        )));
    }
    let states: Vec<_> = points.states().copied().collect();
    Ok((1..=p_max).find(|&p| period_mismatch(&states, p) < tol))
}

/// Largest distance of a dense sample from the window's time-averaged state.
pub fn intra_period_variance(traj: &Trajectory, last_k_periods: usize) -> Result<f64> {
    if !traj.is_dense() {
        return Err(Error::Record("dense record absent".into()));
    }
    let t_end = traj.samples.last().map(|s| s.t).unwrap_or(0.0);
    let t_start = t_end - last_k_periods as f64 * traj.config.drive.period;
    // small slack so the sample at exactly t_start is kept
    let window = traj.window(t_start - 1e-9 * traj.config.drive.period);
    let n = window.len() as f64;
    let mean = window
        .iter()
        .fold(MeanFieldState::default(), |acc, s| acc + s.state);
    let mean = (1.0 / n) * mean;
    Ok(window
        .iter()
        .map(|s| s.state.euclid(&mean))
        .fold(0.0, f64::max))
}

/// Whether two states are mean-field parity partners:
/// `(x, p, jx) <-> -(x, p, jx)` with matching `|jy|` and `jz`.
pub fn parity_pairing_check(a: &MeanFieldState, b: &MeanFieldState, tol: f64) -> bool {
    let flipped = [
        a.x + b.x,
        a.p + b.p,
        a.jx + b.jx,
        a.jy.abs() - b.jy.abs(),
        a.jz - b.jz,
    ];
    let nontrivial = a.x.abs().max(a.jx.abs()).max(a.p.abs()) > tol;
    nontrivial && flipped.iter().all(|d| d.abs() <= tol)
}

/// Two-scale correlation dimension and the largest nearest-neighbour distance
/// of the stroboscopic cloud, after centring and scaling to unit RMS radius.
///
/// The dimension is `log(q2 / q1) / log(r2 / r1)` where `r_i` is the `q_i`
/// quantile of all pairwise distances.
pub fn geometry_estimate(points: &StroboscopicSequence) -> Result<(f64, f64)> {
    const Q_LO: f64 = 0.02;
    const Q_HI: f64 = 0.2;
    let n = points.len();
    if n < 200 {
        return Err(Error::Record(format!(
            "geometry needs >= 200 points, got {n}"
        )));
    }
    let states: Vec<[f64; 5]> = points.states().map(|s| s.to_array()).collect();
    let mut centre = [0.0; 5];
    for s in &states {
        for k in 0..5 {
            centre[k] += s[k] / n as f64;
        }
    }
    let rms = (states
        .iter()
        .map(|s| (0..5).map(|k| (s[k] - centre[k]).powi(2)).sum::<f64>())
        .sum::<f64>()
        / n as f64)
        .sqrt();
    if rms < 1e-12 {
        return Ok((0.0, 0.0));
    }
    let scaled: Vec<[f64; 5]> = states
        .iter()
        .map(|s| std::array::from_fn(|k| (s[k] - centre[k]) / rms))
        .collect();
    let dist =
        |a: &[f64; 5], b: &[f64; 5]| (0..5).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt();

    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    let mut nearest = vec![f64::INFINITY; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist(&scaled[i], &scaled[j]);
            pairs.push(d);
            nearest[i] = nearest[i].min(d);
            nearest[j] = nearest[j].min(d);
        }
    }
    let nn_spread = nearest.iter().copied().fold(0.0, f64::max);
    pairs.sort_by(f64::total_cmp);
    let quantile = |q: f64| pairs[((q * pairs.len() as f64) as usize).min(pairs.len() - 1)];
    let (r_lo, r_hi) = (quantile(Q_LO), quantile(Q_HI));
    let dimension = if r_lo <= 0.0 || r_hi <= r_lo {
        // most of the mass sits on a few repeated points
        0.0
    } else {
        (Q_HI / Q_LO).ln() / (r_hi / r_lo).ln()
    };
    Ok((dimension, nn_spread))
}

fn centroid(states: &[MeanFieldState], phase: usize, period: usize) -> MeanFieldState {
    let picked: Vec<_> = states.iter().skip(phase).step_by(period).copied().collect();
    let sum = picked.iter().fold(MeanFieldState::default(), |a, s| a + *s);
    (1.0 / picked.len() as f64) * sum
}

/// Label the long-time dynamics.
pub fn classify(
    traj: &Trajectory,
    strobe: &StroboscopicSequence,
    th: &Thresholds,
) -> Result<PhaseLabel> {
    let mut diag = Diagnostics::default();
    let exact = detect_period(strobe, th.period_tol, th.p_max)?;
    let period = match exact {
        Some(p) => Some(p),
        None => {
            let coarse = detect_period(strobe, th.coarse_period_tol, th.p_max)?;
            diag.coarse = coarse.is_some();
            coarse
        }
    };
    diag.period = period;

    if let Some(p) = period {
        diag.clusters = p;
        let states: Vec<_> = strobe.states().copied().collect();
        if p == 2 {
            let a = centroid(&states, 0, 2);
            let b = centroid(&states, 1, 2);
            diag.parity = Some(parity_pairing_check(&a, &b, th.parity_tol));
        }
        let kind = match p {
            1 => {
                let v = intra_period_variance(traj, th.variance_periods)?;
                diag.variance = Some(v);
                if v < th.tiss_variance && !diag.coarse {
                    PhaseKind::Tiss
                } else {
                    PhaseKind::PeriodN(1)
                }
            }
            2 => PhaseKind::Dtc,
            n => PhaseKind::PeriodN(n),
        };
        return Ok(PhaseLabel {
            kind,
            diagnostics: diag,
        });
    }

    let (dim, spread) = geometry_estimate(strobe)?;
    diag.dimension = Some(dim);
    diag.nn_spread = Some(spread);
    let kind = if dim > th.lc_dim_hi {
        PhaseKind::Thermal
    } else if dim >= th.lc_dim_lo {
        if spread < th.lc_nn_spread {
            PhaseKind::LimitCycle
        } else {
            PhaseKind::Thermal
        }
    } else {
        PhaseKind::Unresolved
    };
    Ok(PhaseLabel {
        kind,
        diagnostics: diag,
    })
}
