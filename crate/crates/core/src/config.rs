//! Flat `key = value` configuration.
//!
//! Layers are merged with later layers winning (defaults < preset < file <
//! flags) and then resolved into typed configs. `#` starts a comment.

use std::collections::BTreeMap;

use crate::analysis::Thresholds;
use crate::error::{Error, Result};
use crate::integrator::{InitialCondition, SimulationConfig};
use crate::model::{
    Branch, ClipMode, DissipationSchedule, DriveProtocol, EomVariant, MeanFieldState,
    NoiseSettings, Regime,
};
use crate::sweep::{Axis, SweepParam, SweepSpec};

pub const SIMULATION_KEYS: &[&str] = &[
    "lambda0",
    "omega_t",
    "epsilon",
    "period_mode",
    "kappa_mode",
    "kappa0",
    "m",
    "kappa_max",
    "clip",
    "noise_a0",
    "seed",
    "noise_interval",
    "variant",
    "initial",
    "x0",
    "p0",
    "jx0",
    "jy0",
    "jz0",
    "periods_total",
    "periods_recorded",
    "steps_per_period",
    "record_dense",
    "dense_stride",
    "norm_tolerance",
];

pub const THRESHOLD_KEYS: &[&str] = &[
    "period_tol",
    "coarse_period_tol",
    "p_max",
    "tiss_variance",
    "variance_periods",
    "parity_tol",
    "lc_dim_lo",
    "lc_dim_hi",
    "lc_nn_spread",
];

pub const SWEEP_KEYS: &[&str] = &["axis1", "axis2", "workers"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Self::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected 'key = value', got '{}'",
                    n + 1,
                    raw.trim()
                )));
            };
            m.set(k.trim(), v.trim())?;
        }
        Ok(m)
    }

    /// Rejects unknown keys so typos do not silently fall back to defaults.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let known = SIMULATION_KEYS
            .iter()
            .chain(THRESHOLD_KEYS)
            .chain(SWEEP_KEYS)
            .any(|k| *k == key);
        if !known {
            return Err(Error::Config(format!("unknown key '{key}'")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Overlays `other` on top of `self`.
    pub fn merge(&mut self, other: &ConfigMap) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), |v| parse_f64(key, v))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                Error::Config(format!("{key}: expected a non-negative integer, got '{v}'"))
            }),
        }
    }

    fn require_f64(&self, key: &str) -> Result<f64> {
        match self.get(key) {
            Some(v) => parse_f64(key, v),
            None => Err(Error::Config(format!("missing required key '{key}'"))),
        }
    }

    pub fn simulation(&self) -> Result<SimulationConfig> {
        let lambda0 = self.require_f64("lambda0")?;
        let epsilon = self.f64_or("epsilon", 0.0)?;
        let omega_t = self.f64_or("omega_t", 1.0)?;
        let kappa0 = self.require_f64("kappa0")?;
        let kappa_max = self.f64_or("kappa_max", 5.0)?;

        let mut schedule = match self.get("kappa_mode").unwrap_or("jc") {
            "constant" => DissipationSchedule::constant(kappa0, kappa_max)?,
            "jc" => {
                DissipationSchedule::jaynes_cummings(kappa0, self.require_f64("m")?, kappa_max)?
            }
            other => {
                return Err(Error::Config(format!(
                    "kappa_mode must be 'constant' or 'jc', got '{other}'"
                )))
            }
        };
        schedule.clip = match self.get("clip").unwrap_or("literal") {
            "literal" => ClipMode::Literal,
            "sign_preserving" => ClipMode::SignPreserving,
            other => {
                return Err(Error::Config(format!(
                    "clip must be 'literal' or 'sign_preserving', got '{other}'"
                )))
            }
        };

        let drive = match self.get("period_mode").unwrap_or("auto") {
            "auto" if schedule.regime() == Regime::NonMarkovian => {
                DriveProtocol::with_period(lambda0, schedule.nm_period()?, epsilon)?
            }
            "auto" | "omega_t" => DriveProtocol::new(lambda0, omega_t, epsilon)?,
            other => {
                return Err(Error::Config(format!(
                    "period_mode must be 'auto' or 'omega_t', got '{other}'"
                )))
            }
        };

        let mut c = SimulationConfig::new(drive, schedule);
        let a0 = self.f64_or("noise_a0", 0.0)?;
        if a0 > 0.0 || self.get("noise_interval").is_some() {
            let seed = match self.get("seed") {
                None => 0,
                Some(v) => v.parse().map_err(|_| {
                    Error::Config(format!("seed: expected an unsigned integer, got '{v}'"))
                })?,
            };
            let mut n = NoiseSettings::new(a0, seed)?;
            if let Some(v) = self.get("noise_interval") {
                n.resample_interval = Some(parse_f64("noise_interval", v)?);
            }
            c.noise = Some(n);
        }
        c.variant = match self.get("variant").unwrap_or("consistent") {
            "consistent" => EomVariant::Consistent,
            "literal_appendix_a" => EomVariant::LiteralAppendixA,
            other => {
                return Err(Error::Config(format!(
                    "variant must be 'consistent' or 'literal_appendix_a', got '{other}'"
                )))
            }
        };
        c.initial = match self.get("initial").unwrap_or("plus") {
            "plus" => InitialCondition::SteadyState {
                branch: Branch::Plus,
            },
            "minus" => InitialCondition::SteadyState {
                branch: Branch::Minus,
            },
            "normal" => InitialCondition::State {
                state: MeanFieldState::normal(),
            },
            "state" => InitialCondition::State {
                state: MeanFieldState::new(
                    self.require_f64("x0")?,
                    self.require_f64("p0")?,
                    self.require_f64("jx0")?,
                    self.require_f64("jy0")?,
                    self.require_f64("jz0")?,
                ),
            },
            other => {
                return Err(Error::Config(format!(
                    "initial must be plus, minus, normal or state, got '{other}'"
                )))
            }
        };
        c.periods_total = self.usize_or("periods_total", c.periods_total)?;
        c.periods_recorded = self.usize_or("periods_recorded", c.periods_recorded)?;
        c.steps_per_period = self.usize_or("steps_per_period", c.steps_per_period)?;
        c.dense_stride = self.usize_or("dense_stride", c.dense_stride)?;
        c.norm_tolerance = self.f64_or("norm_tolerance", c.norm_tolerance)?;
        c.record_dense = match self.get("record_dense").unwrap_or("true") {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::Config(format!(
                    "record_dense must be true or false, got '{other}'"
                )))
            }
        };
        c.validate()?;
        if let InitialCondition::State { state } = c.initial {
            if (state.spin_norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "initial spin must have |j| = 1, got {}",
                    state.spin_norm()
                )));
            }
        }
        Ok(c)
    }

    pub fn thresholds(&self) -> Result<Thresholds> {
        let d = Thresholds::default();
        let t = Thresholds {
            period_tol: self.f64_or("period_tol", d.period_tol)?,
            coarse_period_tol: self.f64_or("coarse_period_tol", d.coarse_period_tol)?,
            p_max: self.usize_or("p_max", d.p_max)?,
            tiss_variance: self.f64_or("tiss_variance", d.tiss_variance)?,
            variance_periods: self.usize_or("variance_periods", d.variance_periods)?,
            parity_tol: self.f64_or("parity_tol", d.parity_tol)?,
            lc_dim_lo: self.f64_or("lc_dim_lo", d.lc_dim_lo)?,
            lc_dim_hi: self.f64_or("lc_dim_hi", d.lc_dim_hi)?,
            lc_nn_spread: self.f64_or("lc_nn_spread", d.lc_nn_spread)?,
        };
        if !(t.period_tol > 0.0 && t.coarse_period_tol >= t.period_tol && t.p_max >= 1) {
            return Err(Error::Config(
                "need period_tol > 0, coarse_period_tol >= period_tol and p_max >= 1".into(),
            ));
        }
        Ok(t)
    }

    /// Sweep over `axis1` x `axis2` (each `name:min:max:count`) around the
    /// simulation config. A swept `m` may be left out of the base keys.
    pub fn sweep(&self) -> Result<SweepSpec> {
        let axis = |key: &str| -> Result<Axis> {
            let v = self
                .get(key)
                .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))?;
            parse_axis(v)
        };
        let (a1, a2) = (axis("axis1")?, axis("axis2")?);
        let mut base_map = self.clone();
        for a in [a1, a2] {
            if a.param == SweepParam::M && base_map.get("m").is_none() {
                base_map.entries.insert("m".into(), a.min.to_string());
            }
        }
        let base = base_map.simulation()?;
        let mut spec = SweepSpec::new(a1, a2, base);
        spec.omega_t = self.f64_or("omega_t", 1.0)?;
        spec.thresholds = self.thresholds()?;
        spec.seed = self.get("seed").map_or(Ok(0), |v| {
            v.parse().map_err(|_| {
                Error::Config(format!("seed: expected an unsigned integer, got '{v}'"))
            })
        })?;
        spec.workers = self.usize_or("workers", 1)?;
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a number, got '{v}'")))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Config(format!("{key}: must be finite, got '{v}'")))
    }
}

pub fn parse_axis(v: &str) -> Result<Axis> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(Error::Config(format!(
            "axis must look like name:min:max:count, got '{v}'"
        )));
    }
    let count = parts[3]
        .parse()
        .map_err(|_| Error::Config(format!("axis count must be an integer, got '{}'", parts[3])))?;
    Ok(Axis::new(
        SweepParam::parse(parts[0])?,
        parse_f64("axis min", parts[1])?,
        parse_f64("axis max", parts[2])?,
        count,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ConfigMap {
        ConfigMap::parse("lambda0 = 1\nkappa_mode = constant\nkappa0 = 0.05 # loss\n").unwrap()
    }

    #[test]
    fn parses_and_defaults() {
        let c = base().simulation().unwrap();
        assert_eq!(c.drive.lambda0, 1.0);
        assert_eq!(c.schedule.kappa0, 0.05);
        assert_eq!(c.steps_per_period, 4096);
        assert_eq!(c.periods_total, 1000);
        assert!(c.noise.is_none());
        assert!((c.drive.period - std::f64::consts::TAU).abs() < 1e-15);
    }

    #[test]
    fn later_layers_win() {
        let mut m = base();
        m.merge(&ConfigMap::parse("kappa0 = 2.7\nepsilon = 0.02").unwrap());
        let c = m.simulation().unwrap();
        assert_eq!(c.schedule.kappa0, 2.7);
        assert_eq!(c.drive.epsilon, 0.02);
    }

    #[test]
    fn missing_lambda_is_a_config_error() {
        let e = ConfigMap::parse("kappa0 = 1\nkappa_mode = constant")
            .unwrap()
            .simulation()
            .unwrap_err();
        assert!(e.is_usage());
        assert!(e.to_string().contains("lambda0"));
    }

    #[test]
    fn unknown_keys_and_bad_lines_are_rejected() {
        assert!(ConfigMap::parse("lamda0 = 1").is_err());
        assert!(ConfigMap::parse("lambda0").is_err());
        let mut m = base();
        m.set("kappa_mode", "weird").unwrap();
        assert!(m.simulation().is_err());
    }

    #[test]
    fn non_markovian_auto_period() {
        let m = ConfigMap::parse("lambda0 = 1\nkappa0 = 2.7\nm = 0.675\nepsilon = 0.02").unwrap();
        let c = m.simulation().unwrap();
        assert_eq!(c.drive.period, c.schedule.nm_period().unwrap());
        let mut fixed = m.clone();
        fixed.set("period_mode", "omega_t").unwrap();
        assert!((fixed.simulation().unwrap().drive.period - std::f64::consts::TAU).abs() < 1e-15);
    }

    #[test]
    fn noise_and_initial_state() {
        let mut m = base();
        m.merge(&ConfigMap::parse("noise_a0 = 0.5\nseed = 7\ninitial = state\nx0 = 0\np0 = 0\njx0 = 0\njy0 = 0.6\njz0 = -0.8").unwrap());
        let c = m.simulation().unwrap();
        assert_eq!(c.noise.unwrap().seed, 7);
        assert_eq!(c.initial_state().unwrap().jy, 0.6);
        m.set("jz0", "-0.5").unwrap();
        assert!(m.simulation().is_err());
    }

    #[test]
    fn sweep_axes() {
        let mut m = ConfigMap::parse("lambda0 = 1\nkappa0 = 2.7\nkappa_max = 5").unwrap();
        m.set("axis1", "m:0.135:8.1:41").unwrap();
        m.set("axis2", "epsilon:0:0.1:41").unwrap();
        m.set("workers", "4").unwrap();
        let s = m.sweep().unwrap();
        assert_eq!(s.len(), 41 * 41);
        assert_eq!(s.axis1.param, SweepParam::M);
        assert_eq!(s.workers, 4);
        assert!(parse_axis("m:0:1").is_err());
        assert!(parse_axis("omega:0:1:3").is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = base();
        assert_eq!(ConfigMap::parse(&m.to_text()).unwrap(), m);
    }
}
