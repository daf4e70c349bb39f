//! Random number streams.
//!
//! Every stochastic routine takes a `u64` seed and builds a
//! [`Xoshiro256PlusPlus`] from it with `seed_from_u64` (SplitMix64 seeding).
//! Independent streams for chains, bootstrap replicates or simulated draws are
//! derived with [`stream_seed`], so results never depend on scheduling.

use rand::SeedableRng;
pub use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator used throughout the crate.
pub type StreamRng = Xoshiro256PlusPlus;

/// One SplitMix64 output step.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sub-stream `index` of `master`: `splitmix64(master ⊕ index)`.
#[inline]
pub fn stream_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ index)
}

pub fn rng_from_seed(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

pub fn stream_rng(master: u64, index: u64) -> StreamRng {
    rng_from_seed(stream_seed(master, index))
}
