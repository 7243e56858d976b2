//! Deterministic random streams.
//!
//! Every random draw in a run comes from a [`RngStream`] identified by a
//! `(seed, stream_id)` pair. The generator is ChaCha8, whose output is fully
//! specified and therefore identical on every platform.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Logical consumers of randomness inside a single replication. Each gets
/// its own stream so that, for instance, switching the point sampler does
/// not perturb the subregion-selection draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Consumer {
    Selection = 0,
    Points = 1,
    MonteCarlo = 2,
    Surrogate = 3,
    Reference = 4,
}

/// Number of stream ids reserved per replication.
pub const STREAMS_PER_REPLICATION: u64 = 16;

/// Stream id for `consumer` within `replication`.
pub fn stream_id(replication: u64, consumer: Consumer) -> u64 {
    replication * STREAMS_PER_REPLICATION + consumer as u64
}

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn for_consumer(seed: u64, replication: u64, consumer: Consumer) -> Self {
        Self::new(seed, stream_id(replication, consumer))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform on `[lo, hi]`; returns `lo` for a zero-width interval.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        let x = lo + (hi - lo) * self.uniform();
        x.clamp(lo, hi)
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    /// Bernoulli draw with success probability `p`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard exponential variate.
    pub fn exponential(&mut self) -> f64 {
        // 1 - U lies in (0, 1], so the log is finite.
        -libm::log(1.0 - self.uniform())
    }

    /// Draws an index according to `weights`, which must be non-negative and
    /// not all zero. Uses inversion on the cumulative sum.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let target = self.uniform() * total;
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                last_positive = i;
                acc += w;
                if target < acc {
                    return i;
                }
            }
        }
        last_positive
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
