//! Seed derivation and the crate-wide deterministic generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `(master, stream, index)`.
///
/// Used wherever work is split (per fold, per tree, per k) so that each unit
/// is reproducible regardless of execution order.
pub fn derive(master: u64, stream: u64, index: u64) -> u64 {
    mix(mix(master ^ mix(stream)) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn derived_rng(master: u64, stream: u64, index: u64) -> Rng {
    rng(derive(master, stream, index))
}

// Stream tags.
pub const STREAM_SYNTH: u64 = 1;
pub const STREAM_GLOVE: u64 = 2;
pub const STREAM_KMEANS: u64 = 3;
pub const STREAM_FOREST: u64 = 4;
pub const STREAM_BORUTA: u64 = 5;
pub const STREAM_GBT: u64 = 6;
pub const STREAM_FOLDS: u64 = 7;
pub const STREAM_FOLD_WORK: u64 = 8;
pub const STREAM_SEMANTIC: u64 = 9;
