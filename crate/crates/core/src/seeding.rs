//! Deterministic seed derivation.
//!
//! Every source of randomness in the crate is a ChaCha stream derived from a
//! base seed and a context tag, so independent pipeline stages never share or
//! reorder draws.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a child RNG from `(base, tag)`. The same pair always yields the
/// same stream; distinct tags yield independent streams.
pub fn derived_rng(base: u64, tag: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(tag.as_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Derive a child seed for handing to code that wants a `u64`.
pub fn derived_seed(base: u64, tag: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(tag.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}
