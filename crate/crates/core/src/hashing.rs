//! Keyed, order-independent randomness.
//!
//! Coins and noise draws are derived from `(seed, salt, key)` rather than a
//! sequential RNG stream, so a member's draw does not depend on iteration
//! order or on which other members exist. Not cryptographic.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of `(seed, salt, key)`.
#[inline]
#[must_use]
pub fn keyed_hash(seed: u64, salt: u64, key: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(salt)) ^ key)
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
#[inline]
#[must_use]
pub fn keyed_unit(seed: u64, salt: u64, key: u64) -> f64 {
    let top = keyed_hash(seed, salt, key) >> 11;
    top as f64 / (1u64 << 53) as f64
}

/// Bernoulli(p) coin keyed on `(seed, salt, key)`.
#[inline]
#[must_use]
pub fn keyed_coin(seed: u64, salt: u64, key: u64, p: f64) -> bool {
    keyed_unit(seed, salt, key) < p
}

/// Seed for a derived sub-stream (replication index, bin index, ...).
#[inline]
#[must_use]
pub fn derive_seed(seed: u64, salt: u64, index: u64) -> u64 {
    keyed_hash(seed, salt, index)
}

/// Dedicated RNG for one keyed stream.
#[must_use]
pub fn keyed_rng(seed: u64, salt: u64, key: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(keyed_hash(seed, salt, key))
}
