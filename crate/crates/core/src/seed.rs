//! Seed derivation. Every stochastic step in the crate draws from a
//! ChaCha stream whose seed is derived here from an explicit root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `base` and a stream tag.
pub fn derive(base: u64, tag: u64) -> u64 {
    mix(mix(base) ^ tag.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub mod tags {
    pub const DATA: u64 = 1;
    pub const PARTITION: u64 = 2;
    pub const TRAIN: u64 = 3;
    pub const INIT: u64 = 4;
    pub const ASSIGNMENT: u64 = 5;
    pub const PARTICIPATION: u64 = 6;
    pub const SPLIT: u64 = 7;
}
