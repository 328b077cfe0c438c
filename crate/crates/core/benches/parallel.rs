use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use realisable::par::{map_range, map_range_serial};
use realisable::rng::Stream;
use realisable::univariate::mk_estimate;
use realisable::ExtendedValue;
use std::hint::black_box;

const REPS: usize = 16;

fn sample(n: usize, seed: u64) -> Vec<ExtendedValue> {
    let mut s = Stream::new(seed);
    (0..n)
        .map(|_| {
            let x = s.normal();
            if s.bernoulli(0.8) {
                ExtendedValue::Observed(x)
            } else {
                ExtendedValue::Missing
            }
        })
        .collect()
}

fn replication(data: &[Vec<ExtendedValue>], r: usize) -> f64 {
    mk_estimate(&data[r], 0.1, 0.8, 1.0).unwrap().value
}

fn mk_replications(c: &mut Criterion) {
    let mut group = c.benchmark_group("mk_replications");
    group.sample_size(10);
    for n in [500, 2_000] {
        let data: Vec<Vec<ExtendedValue>> = (0..REPS).map(|r| sample(n, r as u64)).collect();
        group.bench_with_input(BenchmarkId::new("serial", n), &data, |b, data| {
            b.iter(|| map_range_serial(REPS, |r| black_box(replication(data, r))))
        });
        group.bench_with_input(BenchmarkId::new("parallel", n), &data, |b, data| {
            b.iter(|| map_range(REPS, |r| black_box(replication(data, r))))
        });
    }
    group.finish();
}

criterion_group!(benches, mk_replications);
criterion_main!(benches);
