use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dtc_core::presets;
use dtc_core::{classify, simulate, SimulationConfig, Thresholds};

fn preset(name: &str) -> SimulationConfig {
    presets::load(name).unwrap().simulation().unwrap()
}

// Ten drive periods at the default 4096 steps, no dense record.
fn drive_periods(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate_10_periods");
    for name in ["fig1c", "fig1e", "fig4"] {
        let mut cfg = preset(name);
        cfg.periods_total = 10;
        cfg.periods_recorded = 10;
        cfg.record_dense = false;
        g.bench_function(name, |b| b.iter(|| simulate(black_box(&cfg)).unwrap()));
    }
    g.finish();
}

fn classification(c: &mut Criterion) {
    let th = Thresholds::default();
    let mut g = c.benchmark_group("classify");
    for name in ["fig2b", "fig2d"] {
        let mut cfg = preset(name);
        cfg.periods_total = 600;
        cfg.dense_stride = 16;
        let (traj, strobe) = simulate(&cfg).unwrap();
        g.bench_function(name, |b| {
            b.iter(|| classify(black_box(&traj), black_box(&strobe), &th).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, drive_periods, classification);
criterion_main!(benches);
