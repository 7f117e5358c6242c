use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::normal::normal_quantile;
use crate::error::{Error, Result};

/// Seeded random stream. Normal variates are produced by inverse-CDF from a
/// single uniform so every draw consumes exactly one uniform.
///
/// Not `Sync`-shared: parallel work derives its own stream with
/// [`derive_seed`].
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
    seed: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return normal_quantile(u).expect("u in (0,1)");
            }
        }
    }

    /// Returns 1 with probability `p` (clamped to `[0, 1]`).
    pub fn bernoulli(&mut self, p: f64) -> u8 {
        u8::from(self.uniform() < p)
    }

    /// `k` distinct indices from `0..n`, uniformly without replacement.
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Result<Vec<usize>> {
        if k > n {
            return Err(Error::domain(format!(
                "cannot sample {k} items without replacement from {n}"
            )));
        }
        Ok(rand::seq::index::sample(&mut self.inner, n, k).into_vec())
    }

    /// Index in `0..n` drawn uniformly; `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random::<u64>()
    }
}

/// Mixes a base seed with a stream index (SplitMix64 finalizer applied twice)
/// so that replicate `i` of a run gets a well-separated seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(base.wrapping_add(0x9e37_79b9_7f4a_7c15)) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}
