use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array2;
use pmlkit::estimator::estimate;
use pmlkit::rounding::swap_matrix_round;
use pmlkit::sampling::{sample_profile, Family};
use pmlkit::solver::solve_frac;
use pmlkit::{build_grid, scale_grid, RunConfig, SolverConfig};

fn bench_solver(c: &mut Criterion) {
    let probs = Family::Zipf { k: 200, s: 1.0 }.probs().unwrap();
    let mut group = c.benchmark_group("solve_frac");
    for n in [1_000u64, 10_000] {
        let profile = sample_profile(&probs, n, 1).unwrap();
        let grid = scale_grid(&build_grid(n, 1.0 / 3.0).unwrap(), 4.0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_frac(black_box(&profile), &grid, &SolverConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn bench_rounding(c: &mut Criterion) {
    // Fractional rows with integral columns, like a sparsified allocation.
    let (rows, cols) = (12, 12);
    let mut a = Array2::from_shape_fn((rows, cols), |(i, j)| ((i * 31 + j * 17) % 13) as f64 / 7.0);
    for j in 0..cols {
        let s = a.column(j).sum();
        a[[j % rows, j]] += s.ceil() - s;
    }
    c.bench_function("swap_matrix_round 12x12", |b| b.iter(|| swap_matrix_round(black_box(&a)).unwrap()));
}

fn bench_estimate(c: &mut Criterion) {
    let probs = Family::Uniform { k: 100 }.probs().unwrap();
    let profile = sample_profile(&probs, 5_000, 0).unwrap();
    let mut group = c.benchmark_group("estimate");
    group.sample_size(10);
    group.bench_function("uniform k=100 n=5000", |b| {
        b.iter(|| estimate(black_box(&profile), &RunConfig::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_solver, bench_rounding, bench_estimate);
criterion_main!(benches);
