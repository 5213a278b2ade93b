//! Seed derivation. Every unit of work (composite, entity, attempt) gets its
//! own generator derived from the master seed and its coordinates, so the
//! output never depends on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ForgeRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `master` with SplitMix64 finalization.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Stable 64-bit FNV-1a hash for string coordinates (entity ids, split names).
pub fn hash_str(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn rng_for(master: u64, parts: &[u64]) -> ForgeRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, parts))
}
