//! Named, seedable random streams.
//!
//! All randomness in a run flows from the single scenario seed. Each
//! consumer (mapper, loss model, external occupancy, backoff, background
//! sources) gets its own ChaCha8 stream derived from `(seed, name)`, so
//! changing how many draws one consumer makes never perturbs the others.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive a deterministic sub-stream for `name` from the run seed.
pub fn stream_rng(seed: u64, name: &str) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a64(name.as_bytes()).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
