//! Seed plumbing. Every random choice in the crate flows from one root
//! seed; subcomponents get independent sub-streams keyed by a component
//! id plus an index (fold number, label column, ...), so per-component
//! work stays reproducible no matter how the surrounding code evolves.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Fixed component ids for sub-stream derivation.
pub mod component {
    pub const FOLDS: u64 = 1;
    pub const SMOTE: u64 = 2;
    pub const MODEL: u64 = 3;
    pub const CURVE: u64 = 4;
    pub const DATA: u64 = 5;
}

/// Derive a child seed from `(root, component, index)` via SplitMix64 steps.
pub fn sub_seed(root: u64, component: u64, index: u64) -> u64 {
    let mut z = root;
    for salt in [component, index] {
        z = z.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(salt);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
    }
    z
}

/// Seeded generator for one component sub-stream.
pub fn sub_rng(root: u64, component: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(root, component, index))
}

/// Generator whose stream id encodes a label column, as used by the
/// per-label resampling and one-vs-rest training paths.
pub fn label_rng(seed: u64, label_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label_index as u64);
    rng
}
