use arcfem::{condition_estimate, energy_norm_diff, solve, Method};
use arcfem_bench::system;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn dense_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for n in [128, 512] {
        let sys = system("ex2", Method::Enriched, n);
        group.bench_with_input(BenchmarkId::new("lu", n), &sys, |b, sys| {
            b.iter(|| solve(sys).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("condition", n), &sys, |b, sys| {
            b.iter(|| condition_estimate(sys))
        });
    }
    group.finish();
}

fn energy(c: &mut Criterion) {
    let coarse = solve(&system("ex1", Method::Enriched, 128)).unwrap();
    let fine_sys = system("ex1", Method::Enriched, 256);
    let fine = solve(&fine_sys).unwrap();
    c.bench_function("energy_norm_diff/256", |b| {
        b.iter(|| energy_norm_diff(&fine_sys, &fine, &coarse).unwrap())
    });
}

criterion_group!(benches, dense_solve, energy);
criterion_main!(benches);
