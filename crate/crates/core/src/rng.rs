//! Deterministic random streams derived from one 64-bit seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Stream = ChaCha8Rng;

/// Hashes `(seed, tag, index)` into a 32-byte stream key.
pub fn derive_key(seed: u64, tag: &str, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    h.update(index.to_le_bytes());
    h.finalize().into()
}

/// Independent stream for a module tag and replicate index.
pub fn stream(seed: u64, tag: &str, index: u64) -> Stream {
    ChaCha8Rng::from_seed(derive_key(seed, tag, index))
}

/// Seed for replicate `index` of a whole-run sampler.
pub fn sub_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let k = derive_key(seed, tag, index);
    u64::from_le_bytes(k[..8].try_into().expect("8 bytes"))
}

/// Stream keyed by several integer coordinates, used for lazily regenerated noise.
pub fn keyed_stream(seed: u64, tag: &str, coords: &[i64]) -> Stream {
    let mut h = Sha256::new();
    h.update(derive_key(seed, tag, 0));
    for c in coords {
        h.update(c.to_le_bytes());
    }
    ChaCha8Rng::from_seed(h.finalize().into())
}
