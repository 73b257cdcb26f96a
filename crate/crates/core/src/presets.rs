//! Named parameter sets for the figure reproductions.
//!
//! Each preset is a config layer; flags and files still override it.

use crate::config::ConfigMap;
use crate::error::{Error, Result};

pub struct Preset {
    pub name: &'static str,
    pub about: &'static str,
    /// Sweep presets carry `axis1` / `axis2`.
    pub sweep: bool,
    pub text: &'static str,
}

const FIG1_NM: &str = "lambda0 = 1\nepsilon = 0.02\nkappa0 = 2.7\nm = 0.675\nkappa_max = 5\n";

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig1a",
        about: "constant kappa0 = 0.05: DTC (time series)",
        sweep: false,
        // a slow breathing transient needs the extra periods to die out
        text: concat!(
            "lambda0 = 1\nomega_t = 1\nepsilon = 0.02\nkappa_mode = constant\n",
            "kappa0 = 0.05\nperiods_total = 4000\n"
        ),
    },
    Preset {
        name: "fig1b",
        about: "same run as fig1a (Bloch view)",
        sweep: false,
        text: concat!(
            "lambda0 = 1\nomega_t = 1\nepsilon = 0.02\nkappa_mode = constant\n",
            "kappa0 = 0.05\nperiods_total = 4000\n"
        ),
    },
    Preset {
        name: "fig1c",
        about: "constant kappa0 = 2.7: TISS (time series)",
        sweep: false,
        text: concat!(
            "lambda0 = 1\nomega_t = 1\nepsilon = 0.02\nkappa_mode = constant\n",
            "kappa0 = 2.7\n"
        ),
    },
    Preset {
        name: "fig1d",
        about: "same run as fig1c (Bloch view)",
        sweep: false,
        text: concat!(
            "lambda0 = 1\nomega_t = 1\nepsilon = 0.02\nkappa_mode = constant\n",
            "kappa0 = 2.7\n"
        ),
    },
    Preset {
        name: "fig1e",
        about: "non-Markovian m = kappa0/4, T = T_NM: DTC (time series)",
        sweep: false,
        text: FIG1_NM,
    },
    Preset {
        name: "fig1f",
        about: "same run as fig1e (Bloch view)",
        sweep: false,
        text: FIG1_NM,
    },
    Preset {
        name: "fig2a",
        about: "non-Markovian, thermal",
        sweep: false,
        text: "lambda0 = 1\nkappa0 = 2.7\nkappa_max = 5\nm = 0.2376\nepsilon = 0.025\n",
    },
    Preset {
        name: "fig2b",
        about: "non-Markovian, DTC",
        sweep: false,
        text: "lambda0 = 1\nkappa0 = 2.7\nkappa_max = 5\nm = 0.216\nepsilon = 0.0025\n",
    },
    Preset {
        name: "fig2c",
        about: "non-Markovian, period 6 (sextet)",
        sweep: false,
        text: "lambda0 = 1\nkappa0 = 2.7\nkappa_max = 5\nm = 0.2376\nepsilon = 0.0075\n",
    },
    Preset {
        name: "fig2d",
        about: "non-Markovian, limit cycle",
        sweep: false,
        text: "lambda0 = 1\nkappa0 = 2.7\nkappa_max = 5\nm = 0.2376\nepsilon = 0.085\n",
    },
    Preset {
        name: "fig3a",
        about: "phase diagram over (m, epsilon), kappa_max = 5",
        sweep: true,
        text: concat!(
            "lambda0 = 1\nomega_t = 1\nkappa0 = 2.7\nkappa_max = 5\n",
            "axis1 = m:0.135:8.1:41\naxis2 = epsilon:0:0.1:41\ndense_stride = 16\n"
        ),
    },
    Preset {
        name: "fig3b",
        about: "phase diagram over (m, epsilon), kappa_max = 3",
        sweep: true,
        text: concat!(
            "lambda0 = 1\nomega_t = 1\nkappa0 = 2.7\nkappa_max = 3\n",
            "axis1 = m:0.135:8.1:41\naxis2 = epsilon:0:0.1:41\ndense_stride = 16\n"
        ),
    },
    Preset {
        name: "fig4",
        about: "noisy non-Markovian loss, a0 = 0.5",
        sweep: false,
        text: concat!(
            "lambda0 = 1\nkappa0 = 2.7\nm = 0.675\nkappa_max = 5\nepsilon = 0.03\n",
            "noise_a0 = 0.5\nseed = 1\n"
        ),
    },
    Preset {
        name: "appB-a",
        about: "kappa_max = 10, m = kappa0",
        sweep: false,
        text: "lambda0 = 1\nkappa0 = 2.7\nm = 2.7\nkappa_max = 10\nepsilon = 0.02\n",
    },
    Preset {
        name: "appB-b",
        about: "kappa_max = 10, m = kappa0/4",
        sweep: false,
        text: "lambda0 = 1\nkappa0 = 2.7\nm = 0.675\nkappa_max = 10\nepsilon = 0.02\n",
    },
    Preset {
        name: "appC",
        about: "kappa_max = 3, epsilon = 0.07, m = kappa0/5",
        sweep: false,
        text: "lambda0 = 1\nkappa0 = 2.7\nm = 0.54\nkappa_max = 3\nepsilon = 0.07\n",
    },
];

pub fn find(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        Error::Config(format!(
            "unknown preset '{name}' (available: {})",
            names.join(", ")
        ))
    })
}

pub fn load(name: &str) -> Result<ConfigMap> {
    ConfigMap::parse(find(name)?.text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Regime;

    #[test]
    fn every_preset_resolves() {
        for p in PRESETS {
            let m = ConfigMap::parse(p.text).unwrap();
            if p.sweep {
                m.sweep().unwrap();
            } else {
                m.simulation().unwrap();
            }
        }
        assert!(find("fig9").is_err());
    }

    #[test]
    fn caption_values() {
        let c = load("fig1e").unwrap().simulation().unwrap();
        assert_eq!(c.schedule.regime(), Regime::NonMarkovian);
        assert!((c.drive.omega_t - c.schedule.abs_d() / 2.0).abs() < 1e-12);
        let c = load("fig4").unwrap().simulation().unwrap();
        assert_eq!(c.noise.unwrap().a0, 0.5);
        assert_eq!(c.drive.epsilon, 0.03);
        let s = load("fig3b").unwrap().sweep().unwrap();
        assert_eq!(s.base.schedule.kappa_max, 3.0);
    }
}
