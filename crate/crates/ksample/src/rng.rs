//! Seed derivation and stream construction.
//!
//! Every source of randomness in the crate is a ChaCha stream addressed by
//! `(seed, stream)`. Parallel loops hand each work item its own stream, so
//! results are identical regardless of thread count or execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator for the given master seed and stream index.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive a child seed from a master seed and an index (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Two-level seed derivation for nested loops (sweep point, replicate, ...).
pub fn derive_seed2(seed: u64, a: u64, b: u64) -> u64 {
    derive_seed(derive_seed(seed, a), b)
}
