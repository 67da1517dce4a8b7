//! Chunked map over path indices.
//!
//! Chunks have a fixed size and results come back in chunk order, so reductions
//! folded left-to-right are bitwise reproducible whatever the worker count.

use std::ops::Range;

/// Environment variable that caps the worker count.
pub const THREADS_ENV: &str = "SPQM_THREADS";

pub const CHUNK: usize = 1024;

#[cfg(feature = "parallel")]
pub fn map_chunks<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let chunk = chunk.max(1);
    let n_chunks = n.div_ceil(chunk);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| f(c * chunk..((c + 1) * chunk).min(n)))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_chunks<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let n_chunks = n.div_ceil(chunk);
    (0..n_chunks).map(|c| f(c * chunk..((c + 1) * chunk).min(n))).collect()
}

/// Worker count requested through [`THREADS_ENV`], if any.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

/// Sequential map, used as the reference in benches and tests.
pub fn map_chunks_sequential<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    F: Fn(Range<usize>) -> T,
{
    let chunk = chunk.max(1);
    (0..n.div_ceil(chunk)).map(|c| f(c * chunk..((c + 1) * chunk).min(n))).collect()
}

/// Running sums for a mean and its standard error.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stats {
    pub n: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Stats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Stats) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    pub fn variance(&self) -> f64 {
        let n = self.n as f64;
        let m = self.mean();
        ((self.sum_sq - n * m * m) / (n - 1.0)).max(0.0)
    }

    pub fn std_err(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}
