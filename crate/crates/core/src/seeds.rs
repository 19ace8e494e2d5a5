//! Deterministic sub-seed derivation.
//!
//! Every stochastic component takes a `u64` seed. Sub-seeds are derived from
//! a master seed, a component label and an index:
//!
//! ```text
//! sub = splitmix64(splitmix64(master ^ fnv1a64(label)) ^ index)
//! ```
//!
//! The label hash is FNV-1a over the UTF-8 bytes, so the scheme does not
//! depend on the standard library's hasher and stays stable across releases.
//! Generators are `ChaCha8Rng::seed_from_u64(sub)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(master: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a64(label.as_bytes())) ^ index)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    rng(derive(master, label, index))
}
