use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mfcache::{solve_fpk_forward, solve_hjb_backward, solve_mfe, Field};
use mfcache_bench::solver_fixture;
use std::hint::black_box;

fn solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solver");
    group.sample_size(10);
    for n in [32, 64] {
        let (lat, cfg, m0) = solver_fixture(n);
        let overlap = vec![0.0; lat.nt + 1];
        group.bench_with_input(BenchmarkId::new("hjb_backward", n), &n, |b, _| {
            b.iter(|| solve_hjb_backward(&lat, black_box(&overlap), &cfg).unwrap())
        });
        let policy = Field::constant(lat, 0.1);
        group.bench_with_input(BenchmarkId::new("fpk_forward", n), &n, |b, _| {
            b.iter(|| solve_fpk_forward(&lat, black_box(&policy), &cfg, &m0).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("solve_mfe", n), &n, |b, _| {
            b.iter(|| solve_mfe(&lat, &cfg, black_box(&m0)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, solver);
criterion_main!(benches);
