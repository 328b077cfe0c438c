//! Seeded random streams with a fixed variate budget per logical draw.
//!
//! Every stream is a ChaCha8 keystream (counter based) seeded from a `u64`.
//! Draw costs, in raw 64-bit words:
//!
//! | draw              | words |
//! |-------------------|-------|
//! | `uniform`         | 1     |
//! | `bernoulli`       | 1     |
//! | `index`           | 1     |
//! | `normal`          | 2     |
//! | `shuffle(len k)`  | k - 1 |
//!
//! Child seeds for replications and sub-streams come from [`child_seed`], a
//! splitmix64 cascade that any language can reproduce.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// The splitmix64 finaliser applied to `x + golden gamma`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(splitmix64(master) ^ a) ^ b)`.
pub fn child_seed(master: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ a) ^ b)
}

/// Sub-stream tags used by the samplers.
pub(crate) mod tag {
    pub const MIXING: u64 = 0x4d4958;
    pub const CONTAMINANT: u64 = 0x434f4e;
    pub const PARTITION: u64 = 0x504152;
    pub const NET: u64 = 0x4e4554;
    pub const DESIGN: u64 = 0x444553;
    pub const TRIM: u64 = 0x545249;
    pub const ESTIMATOR: u64 = 0x455354;
}

#[derive(Debug, Clone)]
pub struct Stream {
    inner: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream for sub-task `(a, b)` of `seed`.
    pub fn child(seed: u64, a: u64, b: u64) -> Self {
        Self::new(child_seed(seed, a, b))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform integer in `0..n` by multiply-high (bias below `n / 2^64`).
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal via the cosine branch of Box-Muller.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fisher-Yates, walking from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// A uniformly random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
    }
}
