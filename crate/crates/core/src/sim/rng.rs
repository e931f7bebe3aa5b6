//! Random streams. Every replicate owns a `ChaCha8Rng` seeded from a 64-bit
//! value derived from `(seed, replicate index)` by [`replicate_seed`], so a
//! run is a pure function of its configuration regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Identifier of the generator and splitting rule, echoed in output
/// metadata.
pub const RNG_NAME: &str =
    "ChaCha8Rng (rand_chacha 0.9) seed_from_u64(splitmix64(seed ^ splitmix64(index + 1)))";

/// One round of the SplitMix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `index` of a run seeded with `seed`.
pub fn replicate_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(1)))
}

pub fn replicate_rng(seed: u64, index: u64) -> SimRng {
    SimRng::seed_from_u64(replicate_seed(seed, index))
}
