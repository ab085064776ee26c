//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! seeded from a 64-bit value; child seeds are derived by mixing, never by
//! drawing from a shared generator, so results do not depend on the order in
//! which independent work items run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and a path of indices.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(master), |acc, &i| mix64(acc ^ mix64(i)))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
