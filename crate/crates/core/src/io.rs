//! CSV schemas and run manifests.
//!
//! Every float is written with 17 significant digits in Rust's locale-free
//! scientific notation, so values survive a text round trip bit for bit.
//! Lines end in `\n`; files are UTF-8.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::analysis::{PhaseLabel, Thresholds};
use crate::error::Result;
use crate::integrator::{IntegratorMeta, SimulationConfig, StroboscopicSequence, Trajectory};
use crate::model::{ModelFrequencies, Regime};

pub const TRAJECTORY_COLUMNS: [&str; 8] = ["t", "x", "p", "jx", "jy", "jz", "kappa", "lambda"];
pub const STROBE_COLUMNS: [&str; 6] = ["n", "x", "p", "jx", "jy", "jz"];
pub const KAPPA_COLUMNS: [&str; 2] = ["t", "kappa"];
pub const SWEEP_COLUMNS: [&str; 15] = [
    "epsilon",
    "m",
    "kappa0",
    "kappa_max",
    "lambda0",
    "a0",
    "regime",
    "T",
    "phase",
    "period",
    "variance",
    "dimension",
    "nn_spread",
    "parity_flag",
    "error_note",
];

/// Bumped whenever a column is added, removed or reformatted.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    writeln!(w, "{}", TRAJECTORY_COLUMNS.join(","))?;
    for s in &traj.samples {
        let st = s.state;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(s.t),
            fmt_f64(st.x),
            fmt_f64(st.p),
            fmt_f64(st.jx),
            fmt_f64(st.jy),
            fmt_f64(st.jz),
            fmt_f64(s.kappa),
            fmt_f64(s.lambda)
        )?;
    }
    Ok(())
}

pub fn write_strobe_csv<W: Write>(mut w: W, strobe: &StroboscopicSequence) -> Result<()> {
    writeln!(w, "{}", STROBE_COLUMNS.join(","))?;
    for p in &strobe.points {
        let st = p.state;
        writeln!(
            w,
            "{},{},{},{},{},{}",
            p.n,
            fmt_f64(st.x),
            fmt_f64(st.p),
            fmt_f64(st.jx),
            fmt_f64(st.jy),
            fmt_f64(st.jz)
        )?;
    }
    Ok(())
}

pub fn write_kappa_csv<W: Write>(mut w: W, samples: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "{}", KAPPA_COLUMNS.join(","))?;
    for (t, k) in samples {
        writeln!(w, "{},{}", fmt_f64(*t), fmt_f64(*k))?;
    }
    Ok(())
}

/// Buffered file writer that surfaces flush errors.
pub fn write_file<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Everything needed to reproduce a `simulate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: String,
    pub csv_schema: u32,
    pub config: SimulationConfig,
    pub thresholds: Thresholds,
    /// Derived values, echoed for readers; ignored on reload.
    pub freqs: ModelFrequencies,
    pub regime: Regime,
    pub variant: String,
    pub seed: Option<u64>,
    pub integrator: Option<IntegratorMeta>,
    pub phase: Option<PhaseLabel>,
    pub created_unix: u64,
}

impl RunManifest {
    pub const FORMAT: &'static str = "dtc-run-manifest/1";

    pub fn new(config: &SimulationConfig, thresholds: &Thresholds) -> Self {
        Self {
            format: Self::FORMAT.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            csv_schema: CSV_SCHEMA_VERSION,
            config: config.clone(),
            thresholds: *thresholds,
            freqs: config.freqs(),
            regime: config.schedule.regime(),
            variant: config.variant.as_str().to_string(),
            seed: config.noise.map(|n| n.seed),
            integrator: None,
            phase: None,
            created_unix: unix_now(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{simulate, SimulationConfig};
    use crate::model::{DissipationSchedule, DriveProtocol};

    #[test]
    fn float_format_round_trips() {
        for v in [
            0.0,
            -1.0,
            0.1,
            1.0 / 3.0,
            2.7,
            1e-300,
            -5e300,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(2.7), "2.7000000000000002e0");
        assert_eq!(fmt_f64(-0.5), "-5.0000000000000000e-1");
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn strobe_csv_golden() {
        let strobe = StroboscopicSequence::from_states(
            3,
            [crate::model::MeanFieldState::new(
                0.25, -1.0, 0.6, 0.0, -0.8,
            )],
        );
        let mut out = Vec::new();
        write_strobe_csv(&mut out, &strobe).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "n,x,p,jx,jy,jz\n\
             3,2.5000000000000000e-1,-1.0000000000000000e0,5.9999999999999998e-1,0.0000000000000000e0,-8.0000000000000004e-1\n"
        );
    }

    #[test]
    fn trajectory_csv_shape() {
        let drive = DriveProtocol::new(1.0, 1.0, 0.0).unwrap();
        let mut c = SimulationConfig::new(drive, DissipationSchedule::constant(0.1, 5.0).unwrap());
        c.periods_total = 2;
        c.periods_recorded = 1;
        c.steps_per_period = 256;
        c.dense_stride = 32;
        let (traj, _) = simulate(&c).unwrap();
        let mut out = Vec::new();
        write_trajectory_csv(&mut out, &traj).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,x,p,jx,jy,jz,kappa,lambda");
        assert_eq!(lines.len(), 1 + 9);
        assert!(lines.iter().all(|l| l.split(',').count() == 8));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn manifest_round_trip() {
        let drive = DriveProtocol::new(1.0, 1.0, 0.02).unwrap();
        let c = SimulationConfig::new(
            drive,
            DissipationSchedule::jaynes_cummings(2.7, 0.675, 5.0).unwrap(),
        );
        let m = RunManifest::new(&c, &Thresholds::default());
        let back = RunManifest::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
