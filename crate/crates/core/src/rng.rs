//! Seeded, splittable randomness.
//!
//! Every sampler takes an explicit 64-bit seed. Parallel work derives one
//! stream per (seed, stream-index) pair, so results are bit-identical no
//! matter how many threads execute the streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Counter-based stream RNG: `ChaCha8` keyed by the experiment seed, with the
/// 64-bit stream id selecting an independent substream.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        // Spread the seed over the key with splitmix64 so nearby seeds do not
        // share key bytes.
        let mut s = seed;
        for chunk in key.chunks_mut(8) {
            s = s.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(stream);
        StreamRng { inner }
    }

    /// Bernoulli(p) coin.
    #[inline]
    pub fn coin(&mut self, p: f64) -> bool {
        self.inner.gen::<f64>() < p
    }

    /// Uniform index in `0..n`.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    /// Uniform sign in {-1, +1}.
    #[inline]
    pub fn sign(&mut self) -> i8 {
        if self.inner.gen::<bool>() {
            1
        } else {
            -1
        }
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }
}

/// Derive an independent sub-seed for a numbered trial.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .rotate_left(17)
        .wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One deterministic coin keyed by (seed, tag). Used where a single decision
/// must not depend on discovery order, e.g. the sign of a cluster keyed by
/// its minimal vertex id.
pub fn keyed_coin(seed: u64, tag: u64) -> f64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// Wilson-score 95% confidence interval for a binomial proportion.
pub fn wilson_ci(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}
