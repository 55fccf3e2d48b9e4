use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use lichsolve_bench::{constant_spec, interval_fixture, radial_fixture};
use lichsolve_core::iteration::{
    lipschitz_shifts, monotone_solve, solve_lichnerowicz, MonotoneConfig, SolveOptions, ThetaMode,
};
use lichsolve_core::spectral::zaremba_first;
use lichsolve_core::ScalarField;

fn bench_eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("zaremba_first");
    for n in [200usize, 800, 3200] {
        let (d, a) = interval_fixture(n);
        let all: Vec<usize> = (0..d.node_count()).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| zaremba_first(&d, &a, &all).unwrap().zeta)
        });
    }
    group.finish();
}

fn bench_monotone_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("monotone_solve_constant");
    for n in [101usize, 401] {
        let (d, spec) = constant_spec(n);
        let (h, k) = lipschitz_shifts(&spec, 0.5, 2.0, 33).unwrap();
        let config = MonotoneConfig::new(h, k, 1e-10, 100_000).unwrap();
        let phi = ScalarField::constant(&d, 0.5);
        let psi = ScalarField::constant(&d, 2.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| monotone_solve(&spec, &config, &phi, &psi, &psi).unwrap().iterations)
        });
    }
    group.finish();
}

fn bench_pipeline(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_lichnerowicz_radial");
    group.sample_size(10);
    for n in [200usize, 500] {
        let (_d, spec, ex) = radial_fixture(n);
        let opts = SolveOptions::default();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                solve_lichnerowicz(&spec, &ex, ThetaMode::Fixed, &opts)
                    .unwrap()
                    .report
                    .iterations
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_eigen, bench_monotone_solve, bench_pipeline);
criterion_main!(benches);
