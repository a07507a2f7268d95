//! Seed derivation.
//!
//! All randomness comes from `ChaCha8Rng` streams seeded through [`split`],
//! a SplitMix64 finalizer applied to the parent seed and a list of stream
//! labels. A job's stream therefore depends only on its coordinates
//! (`base_seed`, repetition, fold, purpose) and never on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream labels used when deriving sub-seeds for one training job.
pub mod stream {
    pub const BALANCE: u64 = 1;
    pub const INIT: u64 = 2;
    pub const SHUFFLE: u64 = 3;
    pub const SVM: u64 = 4;
    pub const SOURCE: u64 = 5;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and an ordered path of labels.
pub fn split(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(seed), |acc, &label| {
        splitmix64(acc ^ splitmix64(label))
    })
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
