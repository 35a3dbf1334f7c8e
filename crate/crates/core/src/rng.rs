//! Seeded random number generation.
//!
//! Every sampling routine takes an explicit generator so that experiments
//! are reproducible bit for bit. Independent streams are derived from a
//! master seed by SplitMix64 mixing, which keeps results stable under any
//! scheduling of parallel work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `index`-th independent stream under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master) ^ mix64(index.wrapping_add(0xD1B5_4A32_D192_ED03)))
}

pub fn derived(master: u64, index: u64) -> Rng {
    seeded(derive_seed(master, index))
}
