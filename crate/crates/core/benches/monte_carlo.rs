//! Parallel vs sequential chunked Monte Carlo over paths.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spqm::par::{map_chunks, map_chunks_sequential, Stats};
use spqm::paths::{closed_form_hc, kraus_time_ordered, sample_wiener_indexed, ModifiedMethod, ModifiedSampler};

const STEPS: usize = 1000;
const DT: f64 = 1e-3;

fn plain_chunk(range: std::ops::Range<usize>) -> Stats {
    let mut s = Stats::default();
    for i in range {
        s.push(closed_form_hc(&sample_wiener_indexed(STEPS, DT, 1.0, 1, i as u64)).nu.norm_sqr());
    }
    s
}

fn plain_paths(c: &mut Criterion) {
    let mut g = c.benchmark_group("plain_paths");
    g.sample_size(10);
    for paths in [4096usize, 16384] {
        g.bench_with_input(BenchmarkId::new("parallel", paths), &paths, |b, &n| {
            b.iter(|| map_chunks(n, 512, plain_chunk))
        });
        g.bench_with_input(BenchmarkId::new("sequential", paths), &paths, |b, &n| {
            b.iter(|| map_chunks_sequential(n, 512, plain_chunk))
        });
    }
    g.finish();
}

fn modified_paths(c: &mut Criterion) {
    let sampler = ModifiedSampler::new(STEPS, DT, 1.0, ModifiedMethod::Banded).unwrap();
    let chunk = |range: std::ops::Range<usize>| {
        let mut s = Stats::default();
        for i in range {
            s.push(closed_form_hc(&sampler.sample(2, i as u64)).nu.norm_sqr());
        }
        s
    };
    let mut g = c.benchmark_group("modified_paths");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| map_chunks(8192, 512, chunk)));
    g.bench_function("sequential", |b| b.iter(|| map_chunks_sequential(8192, 512, chunk)));
    g.finish();
}

fn kraus_products(c: &mut Criterion) {
    let chunk = |range: std::ops::Range<usize>| {
        range
            .map(|i| kraus_time_ordered(&sample_wiener_indexed(100, 3e-3, 1.0, 3, i as u64), 8).unwrap().trace().re)
            .sum::<f64>()
    };
    let mut g = c.benchmark_group("kraus_products");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| map_chunks(512, 64, chunk)));
    g.bench_function("sequential", |b| b.iter(|| map_chunks_sequential(512, 64, chunk)));
    g.finish();
}

criterion_group!(benches, plain_paths, modified_paths, kraus_products);
criterion_main!(benches);
