//! Criterion benchmarks: driver generation throughput and the parallel
//! experiment harness against its sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fracsde::{
    generate_path, run_experiment, run_experiment_sequential, EstimatorSel, ExperimentConfig,
    GridSpec, Method, Model,
};

fn bench_fbm(c: &mut Criterion) {
    let mut group = c.benchmark_group("fbm_generate");
    for n in [1024usize, 4096, 16384] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            let grid = GridSpec::new(n, 1.0).unwrap();
            let mut seed = 0u64;
            b.iter(|| {
                seed = seed.wrapping_add(1);
                black_box(generate_path(grid, 0.7, seed, Method::SpectralCirculant).unwrap())
            });
        });
    }
    group.finish();
}

fn experiment_config() -> ExperimentConfig {
    ExperimentConfig {
        model: Model::Verhulst,
        hurst_values: vec![0.6, 0.8],
        c_values: vec![0.7],
        lambda: 0.5,
        x0: 3.0,
        horizon: 1.0,
        n_values: vec![512],
        replicates: 16,
        base_seed: 42,
        estimators: vec![EstimatorSel::H1, EstimatorSel::H2, EstimatorSel::C2],
        ci_level: 0.95,
        refine: 1,
    }
}

fn bench_experiment(c: &mut Criterion) {
    let config = experiment_config();
    let mut group = c.benchmark_group("experiment");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(run_experiment(&config).unwrap()))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(run_experiment_sequential(&config).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, bench_fbm, bench_experiment);
criterion_main!(benches);
