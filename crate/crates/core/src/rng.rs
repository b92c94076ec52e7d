//! Seed derivation.
//!
//! All randomness comes from ChaCha8 streams. A stream is addressed by a root
//! seed and a path of integers (for example `(seed, k)` for the k-th schedule
//! entry, or `(seed, kind, a, M, repetition)` for one sweep trial). The path is
//! folded into a single 64-bit key with SplitMix64 and the generator is seeded
//! from that key, so a given address always yields the same numbers on every
//! platform and in any execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold `path` into `seed`.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Generator for the stream at `(seed, path...)`.
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}
