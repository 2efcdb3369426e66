//! Reproducible random streams for Monte Carlo work.
//!
//! Each stream is ChaCha8 keyed by the seed with its own stream number, so
//! replication `r` always sees the same draws no matter which thread runs it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn normal_with(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.normal()
    }

    /// Chi-square draw with `k > 0` degrees of freedom.
    pub fn chi_square(&mut self, k: f64) -> f64 {
        ChiSquared::new(k).expect("positive degrees of freedom").sample(&mut self.rng)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// `n_streams` independent streams derived from one seed.
pub fn rng_streams(seed: u64, n_streams: usize) -> Vec<RngStream> {
    (0..n_streams as u64).map(|i| RngStream::new(seed, i)).collect()
}
