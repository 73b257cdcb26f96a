//! Two-parameter phase-diagram sweeps with an append-only checkpoint.
//!
//! Checkpoint layout: one JSON header line carrying the spec and its hash,
//! the CSV column line, then one CSV row per finished cell in completion
//! order. Rows are matched back to cells by their axis values, so a resumed
//! run recomputes exactly the cells without a valid row.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{classify, PhaseKind, PhaseLabel, Thresholds};
use crate::error::{Error, Result};
use crate::integrator::{simulate, SimulationConfig};
use crate::io::{fmt_f64, fmt_opt, SWEEP_COLUMNS};
use crate::model::{DriveProtocol, NoiseSettings, Regime, ScheduleKind};

pub const CHECKPOINT_FORMAT: &str = "dtc-sweep-checkpoint/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Epsilon,
    M,
    Kappa0,
    KappaMax,
    Lambda0,
    A0,
}

impl SweepParam {
    pub const ALL: [SweepParam; 6] = [
        SweepParam::Epsilon,
        SweepParam::M,
        SweepParam::Kappa0,
        SweepParam::KappaMax,
        SweepParam::Lambda0,
        SweepParam::A0,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::Epsilon => "epsilon",
            SweepParam::M => "m",
            SweepParam::Kappa0 => "kappa0",
            SweepParam::KappaMax => "kappa_max",
            SweepParam::Lambda0 => "lambda0",
            SweepParam::A0 => "a0",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown sweep parameter '{s}'")))
    }
}

/// Evenly spaced values `min ..= max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(param: SweepParam, min: f64, max: f64, count: usize) -> Self {
        Self {
            param,
            min,
            max,
            count,
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count <= 1 {
            return self.min;
        }
        if i + 1 == self.count {
            return self.max;
        }
        self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config(format!(
                "axis '{}' needs at least one point",
                self.param.as_str()
            )));
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::Config(format!(
                "axis '{}' bounds must be finite",
                self.param.as_str()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Slow (row) axis.
    pub axis1: Axis,
    /// Fast (column) axis.
    pub axis2: Axis,
    /// Template; swept parameters are overwritten per cell.
    pub base: SimulationConfig,
    pub thresholds: Thresholds,
    /// Drive frequency of cells outside the non-Markovian regime. Non-Markovian
    /// cells are driven at `omega_T = |d| / 2`, i.e. one period of `2 pi / |d|`
    /// per half drive period.
    pub omega_t: f64,
    /// Per-cell noise seeds are derived from this and the cell index.
    pub seed: u64,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub checkpoint: Option<PathBuf>,
}

impl SweepSpec {
    pub fn new(axis1: Axis, axis2: Axis, base: SimulationConfig) -> Self {
        Self {
            axis1,
            axis2,
            omega_t: base.drive.omega_t,
            base,
            thresholds: Thresholds::default(),
            seed: 0,
            workers: 1,
            checkpoint: None,
        }
    }

    pub fn len(&self) -> usize {
        self.axis1.count * self.axis2.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        self.axis2.validate()?;
        if self.axis1.param == self.axis2.param {
            return Err(Error::Config("the two sweep axes must differ".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if !(self.omega_t > 0.0 && self.omega_t.is_finite()) {
            return Err(Error::Config(format!(
                "omega_T must be > 0, got {}",
                self.omega_t
            )));
        }
        Ok(())
    }

    /// sha256 over the canonical JSON of everything that affects results,
    /// plus the crate version.
    pub fn hash(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Hashed<'a> {
            version: &'a str,
            spec: &'a SweepSpec,
        }
        let json = serde_json::to_string(&Hashed {
            version: env!("CARGO_PKG_VERSION"),
            spec: self,
        })?;
        let digest = Sha256::digest(json.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn cell_values(&self, index: usize) -> (f64, f64) {
        let (i, j) = (index / self.axis2.count, index % self.axis2.count);
        (self.axis1.value(i), self.axis2.value(j))
    }

    pub fn cell_seed(&self, index: usize) -> u64 {
        splitmix64(self.seed ^ splitmix64(index as u64))
    }

    /// Concrete configuration of one cell.
    pub fn cell_config(&self, index: usize) -> Result<SimulationConfig> {
        let mut c = self.base.clone();
        let mut lambda0 = c.drive.lambda0;
        let mut epsilon = c.drive.epsilon;
        let (v1, v2) = self.cell_values(index);
        let mut a0 = None;
        for (param, v) in [(self.axis1.param, v1), (self.axis2.param, v2)] {
            match param {
                SweepParam::Epsilon => epsilon = v,
                SweepParam::Lambda0 => lambda0 = v,
                SweepParam::Kappa0 => c.schedule.kappa0 = v,
                SweepParam::KappaMax => c.schedule.kappa_max = v,
                SweepParam::M => c.schedule.kind = ScheduleKind::JaynesCummings { m: v },
                SweepParam::A0 => a0 = Some(v),
            }
        }
        if let Some(a0) = a0 {
            let mut n = c.noise.unwrap_or(NoiseSettings {
                a0,
                seed: 0,
                resample_interval: None,
            });
            n.a0 = a0;
            c.noise = Some(n);
        }
        if let Some(n) = c.noise.as_mut() {
            n.seed = self.cell_seed(index);
        }
        c.schedule.validate()?;
        c.drive = if c.schedule.regime() == Regime::NonMarkovian {
            DriveProtocol::with_period(lambda0, c.schedule.nm_period()?, epsilon)?
        } else {
            DriveProtocol::new(lambda0, self.omega_t, epsilon)?
        };
        // Long T_NM periods would otherwise coarsen the absolute step (small m
        // trips the norm-drift abort). Refine by an integer factor so the step
        // never exceeds the one at the nominal period and the dense record
        // keeps its samples per period.
        let nominal = 2.0 * std::f64::consts::PI / self.omega_t;
        let refine = (c.drive.period / nominal - 1e-9).ceil().max(1.0) as usize;
        c.steps_per_period *= refine;
        c.dense_stride *= refine;
        // the classifier needs the dense record
        c.record_dense = true;
        c.validate()?;
        Ok(c)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub epsilon: f64,
    pub m: Option<f64>,
    pub kappa0: f64,
    pub kappa_max: f64,
    pub lambda0: f64,
    pub a0: f64,
    pub regime: Option<Regime>,
    pub period_t: Option<f64>,
    pub phase: PhaseKind,
    pub period: Option<usize>,
    pub variance: Option<f64>,
    pub dimension: Option<f64>,
    pub nn_spread: Option<f64>,
    pub parity_flag: Option<bool>,
    pub error_note: String,
    /// Not persisted.
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl SweepRow {
    fn param(&self, p: SweepParam) -> Option<f64> {
        match p {
            SweepParam::Epsilon => Some(self.epsilon),
            SweepParam::M => self.m,
            SweepParam::Kappa0 => Some(self.kappa0),
            SweepParam::KappaMax => Some(self.kappa_max),
            SweepParam::Lambda0 => Some(self.lambda0),
            SweepParam::A0 => Some(self.a0),
        }
    }

    pub fn to_csv_line(&self) -> String {
        let regime = self.regime.map(|r| r.as_str()).unwrap_or("");
        let parity = match self.parity_flag {
            Some(true) => "true",
            Some(false) => "false",
            None => "",
        };
        let note: String = self
            .error_note
            .chars()
            .map(|c| {
                if matches!(c, ',' | '\n' | '\r' | '"') {
                    ';'
                } else {
                    c
                }
            })
            .collect();
        [
            fmt_f64(self.epsilon),
            fmt_opt(self.m),
            fmt_f64(self.kappa0),
            fmt_f64(self.kappa_max),
            fmt_f64(self.lambda0),
            fmt_f64(self.a0),
            regime.to_string(),
            fmt_opt(self.period_t),
            self.phase.label(),
            self.period.map(|p| p.to_string()).unwrap_or_default(),
            fmt_opt(self.variance),
            fmt_opt(self.dimension),
            fmt_opt(self.nn_spread),
            parity.to_string(),
            note,
        ]
        .join(",")
    }

    /// Parses a data line. The cell index is not stored and is left at zero.
    pub fn from_csv_line(line: &str) -> Result<Self> {
        let bad = |what: &str| Error::Record(format!("{what} in sweep row '{line}'"));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != SWEEP_COLUMNS.len() {
            return Err(bad("wrong field count"));
        }
        let num = |s: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| bad("bad number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad("non-finite number"))
            }
        };
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s).map(Some)
            }
        };
        let regime = match f[6] {
            "" => None,
            s => Some(
                [
                    Regime::Markovian,
                    Regime::NonMarkovian,
                    Regime::Critical,
                    Regime::ConstantMarkovian,
                ]
                .into_iter()
                .find(|r| r.as_str() == s)
                .ok_or_else(|| bad("bad regime"))?,
            ),
        };
        Ok(Self {
            index: 0,
            epsilon: num(f[0])?,
            m: opt(f[1])?,
            kappa0: num(f[2])?,
            kappa_max: num(f[3])?,
            lambda0: num(f[4])?,
            a0: num(f[5])?,
            regime,
            period_t: opt(f[7])?,
            phase: PhaseKind::parse(f[8]).ok_or_else(|| bad("bad phase"))?,
            period: match f[9] {
                "" => None,
                s => Some(s.parse().map_err(|_| bad("bad period"))?),
            },
            variance: opt(f[10])?,
            dimension: opt(f[11])?,
            nn_spread: opt(f[12])?,
            parity_flag: match f[13] {
                "" => None,
                "true" => Some(true),
                "false" => Some(false),
                _ => return Err(bad("bad parity flag")),
            },
            error_note: f[14].to_string(),
            wall_seconds: 0.0,
        })
    }
}

pub fn sweep_csv_header() -> String {
    SWEEP_COLUMNS.join(",")
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{}", sweep_csv_header())?;
    for r in rows {
        writeln!(w, "{}", r.to_csv_line())?;
    }
    Ok(())
}

/// Runs one cell. Failures become an `Unresolved` row with a note.
pub fn run_cell(spec: &SweepSpec, index: usize) -> SweepRow {
    let start = Instant::now();
    let base = &spec.base;
    let (v1, v2) = spec.cell_values(index);
    let mut row = SweepRow {
        index,
        epsilon: base.drive.epsilon,
        m: base.schedule.m(),
        kappa0: base.schedule.kappa0,
        kappa_max: base.schedule.kappa_max,
        lambda0: base.drive.lambda0,
        a0: base.noise.map(|n| n.a0).unwrap_or(0.0),
        regime: None,
        period_t: None,
        phase: PhaseKind::Unresolved,
        period: None,
        variance: None,
        dimension: None,
        nn_spread: None,
        parity_flag: None,
        error_note: String::new(),
        wall_seconds: 0.0,
    };
    for (p, v) in [(spec.axis1.param, v1), (spec.axis2.param, v2)] {
        match p {
            SweepParam::Epsilon => row.epsilon = v,
            SweepParam::M => row.m = Some(v),
            SweepParam::Kappa0 => row.kappa0 = v,
            SweepParam::KappaMax => row.kappa_max = v,
            SweepParam::Lambda0 => row.lambda0 = v,
            SweepParam::A0 => row.a0 = v,
        }
    }
    let outcome = spec.cell_config(index).and_then(|c| {
        row.regime = Some(c.schedule.regime());
        row.period_t = Some(c.drive.period);
        let (traj, strobe) = simulate(&c)?;
        classify(&traj, &strobe, &spec.thresholds)
    });
    match outcome {
        Ok(PhaseLabel { kind, diagnostics }) => {
            row.phase = kind;
            row.period = diagnostics.period;
            row.variance = diagnostics.variance;
            row.dimension = diagnostics.dimension;
            row.nn_spread = diagnostics.nn_spread;
            row.parity_flag = diagnostics.parity;
        }
        Err(e) => row.error_note = e.to_string(),
    }
    row.wall_seconds = start.elapsed().as_secs_f64();
    row
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// One row per cell in row-major order of `(axis1, axis2)`.
    pub rows: Vec<SweepRow>,
    /// Cells simulated by this call (the rest came from the checkpoint).
    pub computed: usize,
    pub spec_hash: String,
}

impl SweepOutcome {
    pub fn counts(&self) -> HashMap<String, usize> {
        let mut m = HashMap::new();
        for r in &self.rows {
            *m.entry(r.phase.label()).or_insert(0) += 1;
        }
        m
    }
}

/// Spec echo, code version and label counts for a finished sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub format: String,
    pub version: String,
    pub csv_schema: u32,
    pub spec_hash: String,
    pub spec: SweepSpec,
    pub counts: std::collections::BTreeMap<String, usize>,
    pub created_unix: u64,
}

impl SweepManifest {
    pub const FORMAT: &'static str = "dtc-sweep-manifest/1";

    pub fn new(spec: &SweepSpec, outcome: &SweepOutcome) -> Self {
        Self {
            format: Self::FORMAT.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            csv_schema: crate::io::CSV_SCHEMA_VERSION,
            spec_hash: outcome.spec_hash.clone(),
            spec: spec.clone(),
            counts: outcome.counts().into_iter().collect(),
            created_unix: crate::io::unix_now(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    version: String,
    spec_hash: String,
    spec: SweepSpec,
}

/// Runs a sweep from scratch. If `spec.checkpoint` names an existing file it
/// must belong to the same spec and is resumed instead.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutcome> {
    spec.validate()?;
    let hash = spec.hash()?;
    let mut done: HashMap<usize, SweepRow> = HashMap::new();
    if let Some(path) = &spec.checkpoint {
        if path.exists() {
            let (header, rows) = read_checkpoint(path, spec)?;
            if header.spec_hash != hash {
                return Err(Error::SpecMismatch {
                    expected: hash,
                    found: header.spec_hash,
                });
            }
            done = rows;
            rewrite_checkpoint(path, &hash, spec, &done)?;
        } else {
            rewrite_checkpoint(path, &hash, spec, &done)?;
        }
    }
    execute(spec, hash, done)
}

/// Continues the sweep stored in `path`, recomputing missing or corrupt cells.
pub fn resume_sweep(path: &Path, workers: usize) -> Result<SweepOutcome> {
    let header = read_header(path)?;
    let mut spec = header.spec;
    spec.workers = workers;
    spec.checkpoint = Some(path.to_path_buf());
    let hash = spec.hash()?;
    if hash != header.spec_hash {
        return Err(Error::SpecMismatch {
            expected: hash,
            found: header.spec_hash,
        });
    }
    run_sweep(&spec)
}

/// The spec stored in a checkpoint header.
pub fn read_spec(path: &Path) -> Result<SweepSpec> {
    Ok(read_header(path)?.spec)
}

fn execute(
    spec: &SweepSpec,
    hash: String,
    mut done: HashMap<usize, SweepRow>,
) -> Result<SweepOutcome> {
    let todo: Vec<usize> = (0..spec.len()).filter(|i| !done.contains_key(i)).collect();
    let sink = match &spec.checkpoint {
        Some(p) => Some(Mutex::new(
            OpenOptions::new()
                .append(true)
                .open(p)
                .map_err(|e| Error::Checkpoint {
                    path: p.clone(),
                    msg: e.to_string(),
                })?,
        )),
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let fresh: Vec<Result<SweepRow>> = pool.install(|| {
        todo.par_iter()
            .map(|&i| {
                let row = run_cell(spec, i);
                if let Some(sink) = &sink {
                    let line = format!("{}\n", row.to_csv_line());
                    let mut f = sink.lock().unwrap_or_else(|p| p.into_inner());
                    f.write_all(line.as_bytes())?;
                    f.flush()?;
                }
                Ok(row)
            })
            .collect()
    });
    let computed = fresh.len();
    for r in fresh {
        let r = r?;
        done.insert(r.index, r);
    }
    let rows = (0..spec.len())
        .map(|i| done.remove(&i).expect("every cell computed"))
        .collect();
    Ok(SweepOutcome {
        rows,
        computed,
        spec_hash: hash,
    })
}

fn checkpoint_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Checkpoint {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

fn read_header(path: &Path) -> Result<CheckpointHeader> {
    let f = File::open(path).map_err(|e| checkpoint_err(path, e.to_string()))?;
    let mut first = String::new();
    BufReader::new(f).read_line(&mut first)?;
    let h: CheckpointHeader = serde_json::from_str(first.trim_end())
        .map_err(|e| checkpoint_err(path, format!("unreadable header: {e}")))?;
    if h.format != CHECKPOINT_FORMAT {
        return Err(checkpoint_err(
            path,
            format!("unknown format '{}'", h.format),
        ));
    }
    Ok(h)
}

/// Header plus every well-formed row that maps onto a cell of `spec`.
/// Later duplicates win; anything unparseable is dropped.
fn read_checkpoint(
    path: &Path,
    spec: &SweepSpec,
) -> Result<(CheckpointHeader, HashMap<usize, SweepRow>)> {
    let header = read_header(path)?;
    let text = fs::read_to_string(path)?;
    let mut lines = text.split('\n');
    lines.next();
    let mut by_key: HashMap<(String, String), usize> = HashMap::new();
    for i in 0..spec.len() {
        let (a, b) = spec.cell_values(i);
        by_key.insert((fmt_f64(a), fmt_f64(b)), i);
    }
    let mut rows = HashMap::new();
    let complete = text.ends_with('\n');
    let all: Vec<&str> = lines.collect();
    for (k, line) in all.iter().enumerate() {
        // the final fragment of a file cut mid-write has no newline
        let last = k + 1 == all.len();
        if line.is_empty() || *line == sweep_csv_header() || (last && !complete) {
            continue;
        }
        let Ok(mut row) = SweepRow::from_csv_line(line) else {
            continue;
        };
        let (Some(a), Some(b)) = (row.param(spec.axis1.param), row.param(spec.axis2.param)) else {
            continue;
        };
        if let Some(&i) = by_key.get(&(fmt_f64(a), fmt_f64(b))) {
            row.index = i;
            rows.insert(i, row);
        }
    }
    Ok((header, rows))
}

/// Atomically replaces the checkpoint with a clean copy of `rows`.
fn rewrite_checkpoint(
    path: &Path,
    hash: &str,
    spec: &SweepSpec,
    rows: &HashMap<usize, SweepRow>,
) -> Result<()> {
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        spec_hash: hash.to_string(),
        spec: spec.clone(),
    };
    let mut body = serde_json::to_string(&header)? + "\n";
    body.push_str(&sweep_csv_header());
    body.push('\n');
    let mut idx: Vec<_> = rows.keys().copied().collect();
    idx.sort_unstable();
    for i in idx {
        body.push_str(&rows[&i].to_csv_line());
        body.push('\n');
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, body).map_err(|e| checkpoint_err(&tmp, e.to_string()))?;
    fs::rename(&tmp, path).map_err(|e| checkpoint_err(path, e.to_string()))?;
    Ok(())
}
