//! Seeding discipline.
//!
//! Every randomized routine takes a 64-bit seed and derives a ChaCha8 stream
//! from it, so runs are bit-exact across platforms and repeat runs. Per-trial
//! seeds are `master ^ splitmix64(trial_index)`; nested stages derive their
//! own streams the same way with a fixed stage tag.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer (Steele, Lea, Flood 2014). Bit-exact by construction.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Per-trial seed: `master ^ splitmix64(trial_index)`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    master ^ splitmix64(trial)
}

/// Sub-stream seed for a fixed stage tag within one trial.
pub fn stage_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag.wrapping_add(0x51ed2701)))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
