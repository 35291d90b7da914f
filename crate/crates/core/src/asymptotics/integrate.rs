//! Chunked, seeded Monte Carlo integration.
//!
//! Draws are split into fixed-size chunks; chunk `j` uses stream
//! `stream_offset + j` under the caller's seed. Chunk accumulators are merged
//! in chunk order, so results are independent of how chunks are scheduled.

use rayon::prelude::*;

use crate::rng::{stream_rng, StreamRng};

pub(crate) const CHUNK: usize = 1 << 14;

/// Monte Carlo estimate of a population expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub value: f64,
    pub std_error: f64,
    pub draws: usize,
}

impl MomentEstimate {
    pub fn exact(value: f64) -> Self {
        MomentEstimate {
            value,
            std_error: 0.0,
            draws: 0,
        }
    }

    /// Standard error of `self - other` for independent estimates.
    pub fn combined_se(&self, other: &MomentEstimate) -> f64 {
        self.std_error.hypot(other.std_error)
    }
}

/// Streaming mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise merge.
    pub fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn estimate(&self) -> MomentEstimate {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        MomentEstimate {
            value: self.mean,
            std_error: (var.max(0.0) / self.n.max(1) as f64).sqrt(),
            draws: self.n,
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Runs `step` over `draws` covariate draws and returns one accumulator per
/// chunk, in chunk order.
pub(crate) fn run_chunks<A, S, F>(
    draws: usize,
    seed: u64,
    stream_offset: u64,
    dim: usize,
    sample: S,
    init: impl Fn() -> A + Sync,
    step: F,
) -> Vec<A>
where
    A: Send,
    S: Fn(&mut StreamRng, &mut [f64]) + Sync,
    F: Fn(&mut A, &[f64]) + Sync,
{
    let chunks = draws.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream_rng(seed, stream_offset + j as u64);
            let mut x = vec![0.0; dim];
            let mut acc = init();
            let len = CHUNK.min(draws - j * CHUNK);
            for _ in 0..len {
                sample(&mut rng, &mut x);
                step(&mut acc, &x);
            }
            acc
        })
        .collect()
}
