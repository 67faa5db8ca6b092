//! Counter-based random streams.
//!
//! A [`CounterRng`] is a 64-bit key. Every random draw is a pure function of
//! the key and a pair of counters (for the process: round and node), so a
//! simulation produces the same picks no matter which order nodes are
//! visited in or how work is split across threads. Independent streams are
//! obtained with [`CounterRng::derive`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const ROW: u64 = 0xd1b5_4a32_d192_ed03;
const COL: u64 = 0xaef1_7502_108e_f2d9;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed.wrapping_add(GOLDEN)),
        }
    }

    /// Independent child stream number `index`.
    #[inline]
    pub fn derive(&self, index: u64) -> Self {
        Self {
            key: mix64(self.key ^ mix64(index.wrapping_add(GOLDEN).wrapping_mul(ROW))),
        }
    }

    /// Raw 64-bit word at position `(a, b)`.
    #[inline]
    pub fn word(&self, a: u64, b: u64) -> u64 {
        mix64(mix64(self.key ^ a.wrapping_mul(ROW)) ^ b.wrapping_mul(COL).wrapping_add(GOLDEN))
    }

    /// Uniform integer in `0..bound` at position `(a, b)`. `bound` must be nonzero.
    #[inline]
    pub fn below(&self, a: u64, b: u64, bound: usize) -> usize {
        debug_assert!(bound > 0);
        // Multiply-shift range reduction; bias is at most bound / 2^64.
        ((self.word(a, b) as u128 * bound as u128) >> 64) as usize
    }

    /// Uniform float in `[0, 1)` at position `(a, b)`.
    #[inline]
    pub fn unit(&self, a: u64, b: u64) -> f64 {
        (self.word(a, b) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Sequential generator seeded from this stream, for shuffles and
    /// sampling without replacement.
    pub fn seq(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}
