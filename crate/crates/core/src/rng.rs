//! Seed derivation for reproducible random streams.
//!
//! Every random draw in the crate comes from a ChaCha stream keyed by a
//! master seed plus a path of integer labels (epoch, batch, member, ...).
//! Streams never depend on thread scheduling, so parallel and sequential
//! runs are bitwise identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes a seed with a path of labels into a new 64-bit seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Independent generator for `(seed, path)`.
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}

/// Stable 64-bit FNV-1a hash, used to turn storm ids into stream labels.
pub fn label_hash(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

// Stream domain labels.
pub(crate) const DOMAIN_SYNTH: u64 = 1;
pub(crate) const DOMAIN_ENKF_INIT: u64 = 2;
pub(crate) const DOMAIN_ENKF_PERTURB: u64 = 3;
pub(crate) const DOMAIN_ENKF_SHUFFLE: u64 = 4;
pub(crate) const DOMAIN_SIM: u64 = 5;
pub(crate) const DOMAIN_SPLICE: u64 = 6;
pub(crate) const DOMAIN_FOLDS: u64 = 7;
pub(crate) const DOMAIN_BOOTSTRAP: u64 = 8;
pub(crate) const DOMAIN_SUBSAMPLE: u64 = 9;
