//! Counter-based random number streams.
//!
//! Every random draw in this crate is addressed by `(seed, stream index)`
//! rather than by a shared mutable generator, so per-sample work can run on
//! any number of threads and still produce identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives a sub-seed from `(seed, tag)` with a splitmix64 finalizer.
///
/// Used to give each training epoch its own noise draw while keeping the
/// whole run a pure function of the configured seed.
pub fn derive(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
