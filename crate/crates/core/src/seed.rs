//! Deterministic seed derivation.
//!
//! Every random stream in a simulation is keyed by a tuple of integers
//! (master seed, peer id, purpose tag, ...) so results do not depend on
//! scheduling or on the order in which streams are created.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into `base` with a SplitMix64 finalizer per step.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix(base.wrapping_add(GOLDEN)), |acc, &p| {
            mix(acc ^ mix(p.wrapping_add(GOLDEN)))
        })
}

/// Hashes a short tag (experiment name, stream purpose) into a seed part.
pub fn tag(name: &str) -> u64 {
    // FNV-1a
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn rng(base: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, parts))
}
