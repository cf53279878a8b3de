//! Seed derivation.
//!
//! Every random choice in a run comes from one root seed. A stage seed is
//! `splitmix64(root ^ fnv1a64(tag) ^ splitmix64(index))`, where `tag` names
//! the stage (e.g. `"split"`, `"folds"`, `"cv-fit"`) and `index` separates
//! repeated uses of the same stage (fold number, repeat number, ...).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

pub fn derive_seed(root: u64, tag: &str, index: u64) -> u64 {
    splitmix64(root ^ fnv1a64(tag.as_bytes()) ^ splitmix64(index))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
