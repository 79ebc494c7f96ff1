use criterion::{criterion_group, criterion_main, Criterion};
use mfcache::radio::{empirical_sinr, mean_field_rate, sample_network};
use mfcache::rng::stream;
use mfcache::Area;
use mfcache_bench::environment;
use std::hint::black_box;

fn radio(c: &mut Criterion) {
    let env = environment(0.05, 1e-4);
    let window = Area::new(200.0, 200.0).unwrap();
    c.bench_function("mean_field_rate", |b| b.iter(|| mean_field_rate(black_box(&env)).unwrap()));
    c.bench_function("sample_network_200m", |b| {
        let mut rng = stream(1, &[]);
        b.iter(|| sample_network(&env, window, &mut rng))
    });
    c.bench_function("empirical_sinr", |b| {
        let mut rng = stream(2, &[]);
        let real = loop {
            let r = sample_network(&env, window, &mut rng);
            if !r.user_positions.is_empty() {
                break r;
            }
        };
        b.iter(|| empirical_sinr(&real, &env, 0, |_| true, &mut rng).unwrap())
    });
}

criterion_group!(benches, radio);
criterion_main!(benches);
