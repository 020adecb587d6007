//! Compares the batch entry points (rayon-backed under the default
//! `parallel` feature) against plain sequential maps over the same inputs.
//! With `--no-default-features` both sides run sequentially, which makes the
//! dispatch overhead of the batch API visible on its own.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use battkit::batch::simulate_many;
use battkit::polyfit::Preset;
use battkit::sim::{simulate, DutyCycleProfile, PowerSource, SimConfig};
use battkit::BatterySpec;

fn batch_configs(n: usize) -> Vec<SimConfig> {
    (0..n)
        .map(|i| {
            let battery = BatterySpec::new(80.0 + i as f64, 3.0).unwrap();
            let profile = DutyCycleProfile::constant_current(0.2 + 0.01 * i as f64).unwrap();
            SimConfig::new(battery, PowerSource::duty_cycle(profile)).unwrap()
        })
        .collect()
}

fn bench_simulate_batch(c: &mut Criterion) {
    let configs = batch_configs(32);
    let mut group = c.benchmark_group("simulate_batch");
    group.sample_size(20);
    group.bench_function("batch_api", |b| {
        b.iter(|| simulate_many(black_box(&configs)))
    });
    group.bench_function("sequential_map", |b| {
        b.iter(|| {
            black_box(&configs)
                .iter()
                .map(simulate)
                .collect::<Vec<_>>()
        })
    });
    group.finish();
}

fn bench_sample_grid(c: &mut Criterion) {
    let curve = Preset::Farnell15k.curve();
    let mut group = c.benchmark_group("sample_grid");
    group.sample_size(30);
    for size in [4_096usize, 262_144] {
        let grid: Vec<f64> = (0..size)
            .map(|i| 1200.0 * i as f64 / (size - 1) as f64)
            .collect();
        group.bench_with_input(BenchmarkId::new("batch_api", size), &grid, |b, g| {
            b.iter(|| curve.sample_grid(black_box(g)))
        });
        group.bench_with_input(BenchmarkId::new("sequential_map", size), &grid, |b, g| {
            b.iter(|| {
                black_box(g)
                    .iter()
                    .map(|&t| curve.sample(t))
                    .collect::<Vec<_>>()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_simulate_batch, bench_sample_grid);
criterion_main!(benches);
