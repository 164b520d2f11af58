//! Seed derivation and the shared generator.
//!
//! Every stochastic step draws from a ChaCha8 stream whose seed is derived
//! from `(seed, tag, indices)`. Derivation is a SplitMix64 chain over the
//! base seed, the FNV-1a hash of the tag and each index, so the stream a
//! task sees depends only on what it is, never on when it runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Derive a sub-seed for the task identified by `tag` and `indices`.
pub fn derive_seed(seed: u64, tag: &str, indices: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ splitmix64(fnv1a(tag)));
    for &i in indices {
        h = splitmix64(h ^ splitmix64(i.wrapping_add(0x51ed_2701)));
    }
    h
}

pub fn rng_for(seed: u64, tag: &str, indices: &[u64]) -> Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, indices))
}
