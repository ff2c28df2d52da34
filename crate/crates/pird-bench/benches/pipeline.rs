//! Benchmarks for each pipeline stage: lattice enumeration, spectral
//! evaluation, full decomposition, the time-domain cross-check, and
//! model fitting.
//!
//! Run with `cargo bench -p pird-bench`; pass a substring to select a
//! group, e.g. `cargo bench -p pird-bench decompose`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use pird_bench::{benchmark_model, wide_model};
use pird_core::engine;
use pird_core::lattice::RedundancyLattice;
use pird_core::spectral::{self, FrequencyGrid};
use pird_core::var::VarModel;

fn bench_lattice(c: &mut Criterion) {
    let mut group = c.benchmark_group("lattice");
    for n in 1..=4usize {
        group.bench_with_input(BenchmarkId::new("enumerate", n), &n, |b, &n| {
            b.iter(|| RedundancyLattice::enumerate(black_box(n)).unwrap());
        });
    }
    let lattice = RedundancyLattice::enumerate(4).unwrap();
    let values: Vec<f64> = (0..lattice.len()).map(|i| (i as f64).sqrt()).collect();
    group.bench_function("moebius_invert_n4", |b| {
        b.iter(|| lattice.moebius_invert(black_box(&values)).unwrap());
    });
    group.finish();
}

fn bench_spectrum(c: &mut Criterion) {
    let model = benchmark_model();
    let mut group = c.benchmark_group("spectrum");
    for points in [257usize, 1025] {
        let grid = FrequencyGrid::uniform(points).unwrap();
        group.bench_with_input(
            BenchmarkId::new("var_to_spectrum", points),
            &grid,
            |b, grid| {
                b.iter(|| spectral::var_to_spectrum(black_box(&model), grid).unwrap());
            },
        );
    }
    group.finish();
}

fn bench_decompose(c: &mut Criterion) {
    let mut group = c.benchmark_group("decompose");
    let grid = FrequencyGrid::uniform(1025).unwrap();

    let model = benchmark_model();
    group.bench_function("two_sources", |b| {
        b.iter(|| engine::decompose(black_box(&model), 2, &[0, 1], &grid, None).unwrap());
    });

    let wide = wide_model();
    group.bench_function("four_sources", |b| {
        b.iter(|| engine::decompose(black_box(&wide), 4, &[0, 1, 2, 3], &grid, None).unwrap());
    });
    group.finish();
}

fn bench_time_domain(c: &mut Criterion) {
    let model = benchmark_model();
    c.bench_function("time_domain_mir", |b| {
        b.iter(|| spectral::time_domain_mir(black_box(&model), &[0, 1], &[2], 200).unwrap());
    });
}

fn bench_fit(c: &mut Criterion) {
    let model = benchmark_model();
    let series = model.simulate(5000, 1000, 31).unwrap();
    let mut group = c.benchmark_group("fit");
    group.bench_function("estimate_order_1", |b| {
        b.iter(|| VarModel::estimate(black_box(&series), 1).unwrap());
    });
    group.bench_function("select_order_max_10", |b| {
        b.iter(|| VarModel::select_order(black_box(&series), 10).unwrap());
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_lattice,
    bench_spectrum,
    bench_decompose,
    bench_time_domain,
    bench_fit
);
criterion_main!(benches);
