//! `dtc`: simulate, sweep and inspect the driven open Dicke model.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dtc_core::config::ConfigMap;
use dtc_core::io::{
    write_file, write_kappa_csv, write_strobe_csv, write_trajectory_csv, RunManifest,
};
use dtc_core::sweep::{resume_sweep, run_sweep, write_sweep_csv, SweepManifest};
use dtc_core::{
    classify, critical_coupling, kappa_trace, presets, relax_to_steady_state, simulate,
    steady_state_residual, steady_state_unchecked, Branch, EomVariant, Error, MeanFieldState,
    ModelFrequencies, RelaxOptions, Result,
};

#[derive(Parser)]
#[command(
    name = "dtc",
    version,
    about = "Mean-field time crystals in the driven open Dicke model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and classify its long-time phase.
    Simulate(SimulateArgs),
    /// Run or resume a two-parameter phase-diagram sweep.
    Sweep(SweepArgs),
    /// Sample the loss rate kappa(t).
    Kappa(KappaArgs),
    /// Closed-form steady states, their residuals and a relaxation check.
    SteadyState(SteadyArgs),
    /// List the built-in presets.
    Presets,
}

/// Config layers shared by the run commands: preset < file < flags.
#[derive(Args, Clone, Default)]
struct Layers {
    /// Built-in parameter set (see `dtc presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    kappa0: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    kappa_max: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Noise amplitude a0.
    #[arg(long)]
    a0: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Layers {
    fn resolve(&self, defaults: &str) -> Result<ConfigMap> {
        let mut map = ConfigMap::parse(defaults)?;
        if let Some(p) = &self.preset {
            map.merge(&presets::load(p)?);
        }
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            map.merge(&ConfigMap::parse(&text)?);
        }
        let mut flags = ConfigMap::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            flags.set(k.trim(), v.trim())?;
        }
        let named = [
            ("lambda0", self.lambda0.map(|v| v.to_string())),
            ("kappa0", self.kappa0.map(|v| v.to_string())),
            ("m", self.m.map(|v| v.to_string())),
            ("kappa_max", self.kappa_max.map(|v| v.to_string())),
            ("epsilon", self.epsilon.map(|v| v.to_string())),
            ("noise_a0", self.a0.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                flags.set(k, &v)?;
            }
        }
        map.merge(&flags);
        Ok(map)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    layers: Layers,
    /// Re-run exactly the configuration recorded in a manifest.
    #[arg(long, conflicts_with_all = ["preset", "config"])]
    from_manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    layers: Layers,
    /// Resume the sweep stored in this checkpoint (spec taken from its header).
    #[arg(long, conflicts_with_all = ["preset", "config"])]
    resume: Option<PathBuf>,
    /// Checkpoint location; defaults to `<out>/sweep.checkpoint`.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct KappaArgs {
    #[command(flatten)]
    layers: Layers,
    /// Time span [0, span].
    #[arg(long, default_value_t = 50.0)]
    span: f64,
    #[arg(long, default_value_t = 1001)]
    samples: usize,
    /// Output CSV; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SteadyArgs {
    #[arg(long)]
    lambda0: f64,
    #[arg(long, default_value_t = 0.0)]
    kappa0: f64,
    #[arg(long, default_value_t = 1.0)]
    omega_t: f64,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Report the normal state instead of failing below the critical coupling.
    #[arg(long)]
    normal: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Kappa(a) => cmd_kappa(a),
        Command::SteadyState(a) => cmd_steady_state(a),
        Command::Presets => {
            for p in presets::PRESETS {
                let kind = if p.sweep { "sweep" } else { "simulate" };
                println!("{:8} {:9} {}", p.name, kind, p.about);
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let (config, thresholds) = match &a.from_manifest {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let m = RunManifest::from_json(&text)
                .map_err(|e| Error::Config(format!("bad manifest {}: {e}", path.display())))?;
            let mut c = m.config;
            if let (Some(seed), Some(n)) = (a.layers.seed, c.noise.as_mut()) {
                n.seed = seed;
            }
            c.validate()?;
            (c, m.thresholds)
        }
        None => {
            let map = a.layers.resolve("")?;
            (map.simulation()?, map.thresholds()?)
        }
    };
    let is_sr = config.is_superradiant()?;
    if !is_sr {
        eprintln!("warning: lambda0 is at or below the critical coupling");
    }
    let (traj, strobe) = simulate(&config)?;
    let label = classify(&traj, &strobe, &thresholds)?;

    ensure_dir(&a.out)?;
    write_file(&a.out.join("trajectory.csv"), |w| {
        write_trajectory_csv(w, &traj)
    })?;
    write_file(&a.out.join("strobe.csv"), |w| write_strobe_csv(w, &strobe))?;
    let mut manifest = RunManifest::new(&config, &thresholds);
    manifest.integrator = Some(traj.meta.clone());
    manifest.phase = Some(label);
    fs::write(a.out.join("manifest.json"), manifest.to_json()?)?;

    let d = &label.diagnostics;
    println!("phase: {}", label.kind);
    println!(
        "period: {}{}",
        d.period
            .map(|p| p.to_string())
            .unwrap_or_else(|| "none".into()),
        if d.coarse { " (coarse)" } else { "" }
    );
    if let Some(v) = d.variance {
        println!("intra-period variance: {v:.3e}");
    }
    if let (Some(dim), Some(s)) = (d.dimension, d.nn_spread) {
        println!("dimension: {dim:.3}, nn spread: {s:.3}");
    }
    if let Some(p) = d.parity {
        println!("parity pairing: {p}");
    }
    println!(
        "T = {:.6}, regime {}, max norm drift {:.2e}",
        config.drive.period,
        config.schedule.regime().as_str(),
        traj.meta.max_norm_drift
    );
    println!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    ensure_dir(&a.out)?;
    let workers = a.workers.unwrap_or(1).max(1);
    let (spec, outcome) = match &a.resume {
        Some(path) => {
            let out = resume_sweep(path, workers)?;
            let mut spec = dtc_core::sweep::read_spec(path)?;
            spec.workers = workers;
            (spec, out)
        }
        None => {
            let map = a.layers.resolve("")?;
            let mut spec = map.sweep()?;
            if let Some(w) = a.workers {
                spec.workers = w.max(1);
            }
            spec.checkpoint = Some(
                a.checkpoint
                    .clone()
                    .unwrap_or_else(|| a.out.join("sweep.checkpoint")),
            );
            let out = run_sweep(&spec)?;
            (spec, out)
        }
    };
    write_file(&a.out.join("sweep.csv"), |w| {
        write_sweep_csv(w, &outcome.rows)
    })?;
    let manifest = SweepManifest::new(&spec, &outcome);
    fs::write(
        a.out.join("sweep_manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    let mut counts: Vec<_> = manifest.counts.iter().collect();
    counts.sort();
    let shown: Vec<_> = counts.iter().map(|(k, v)| format!("{k} {v}")).collect();
    println!(
        "{} cells ({} computed now): {}",
        outcome.rows.len(),
        outcome.computed,
        shown.join(", ")
    );
    println!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_kappa(a: KappaArgs) -> Result<()> {
    // the coupling does not enter kappa(t)
    let map = a.layers.resolve("lambda0 = 1\n")?;
    let config = map.simulation()?;
    let interval = config.step() * config.noise_steps()? as f64;
    let trace = kappa_trace(
        &config.schedule,
        config.noise.as_ref(),
        interval,
        a.span,
        a.samples,
    )?;
    match &a.out {
        Some(path) => write_file(path, |w| write_kappa_csv(w, &trace)),
        None => write_kappa_csv(std::io::stdout().lock(), &trace),
    }
}

fn fmt_state(s: &MeanFieldState) -> String {
    format!(
        "x = {:.12}, p = {:.12}, jx = {:.12}, jy = {:.12}, jz = {:.12}",
        s.x, s.p, s.jx, s.jy, s.jz
    )
}

fn cmd_steady_state(a: SteadyArgs) -> Result<()> {
    let freqs = ModelFrequencies::detuned(a.omega_t, a.epsilon);
    if !(a.lambda0 >= 0.0 && a.kappa0 >= 0.0) {
        return Err(Error::InvalidParameter(
            "lambda0 and kappa0 must be >= 0".into(),
        ));
    }
    let lc = critical_coupling(freqs.omega, freqs.omega0, a.kappa0)?;
    println!(
        "omega = {}, omega0 = {}, kappa0 = {}",
        freqs.omega, freqs.omega0, a.kappa0
    );
    println!("lambda_c = {lc:.12}");
    let residuals = |s: &MeanFieldState| {
        (
            steady_state_residual(s, a.lambda0, &freqs, a.kappa0, EomVariant::Consistent),
            steady_state_residual(s, a.lambda0, &freqs, a.kappa0, EomVariant::LiteralAppendixA),
        )
    };
    let relax_opts = RelaxOptions::default();

    if a.lambda0 <= lc {
        if !a.normal {
            return Err(Error::Domain(format!(
                "lambda0 = {} <= lambda_c = {lc}: no symmetry-broken steady state (use --normal)",
                a.lambda0
            )));
        }
        let n = MeanFieldState::normal();
        let (rc, rl) = residuals(&n);
        println!("normal: {}", fmt_state(&n));
        println!("  residual consistent {rc:.3e}, literal {rl:.3e}");
        if a.kappa0 > 0.0 {
            let tilt = MeanFieldState::new(0.01, 0.0, 0.1, 0.0, -(1.0f64 - 0.01).sqrt());
            let r = relax_to_steady_state(&tilt, a.lambda0, &freqs, a.kappa0, relax_opts)?;
            println!(
                "relaxation from a tilted state: distance to normal {:.3e}",
                r.dist(&n)
            );
        } else {
            println!("relaxation: skipped (no damping at kappa0 = 0)");
        }
        return Ok(());
    }

    for b in [Branch::Plus, Branch::Minus] {
        let s = steady_state_unchecked(a.lambda0, &freqs, a.kappa0, b)?;
        let (rc, rl) = residuals(&s);
        let name = if b == Branch::Plus { "+" } else { "-" };
        println!("branch {name}: {}", fmt_state(&s));
        println!("  residual consistent {rc:.3e}, literal {rl:.3e}");
    }
    let plus = steady_state_unchecked(a.lambda0, &freqs, a.kappa0, Branch::Plus)?;
    if a.kappa0 > 0.0 {
        let mut kick = plus;
        kick.x += 1e-3;
        kick.p -= 1e-3;
        let r = relax_to_steady_state(&kick, a.lambda0, &freqs, a.kappa0, relax_opts)?;
        println!(
            "relaxation from a kicked + branch: distance {:.3e}",
            r.dist(&plus)
        );
    } else {
        println!("relaxation: skipped (no damping at kappa0 = 0)");
    }
    if a.normal {
        let n = MeanFieldState::normal();
        let (rc, rl) = residuals(&n);
        println!("normal: {}", fmt_state(&n));
        println!("  residual consistent {rc:.3e}, literal {rl:.3e}");
    }
    Ok(())
}
