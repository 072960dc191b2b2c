//! Seed derivation. Every random consumer draws from its own ChaCha stream
//! keyed by `(seed, domain, index)`, so results never depend on how work is
//! split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DOMAIN_MOBILITY: u64 = 0x6d6f_6269;
pub const DOMAIN_SIGNAL: u64 = 0x7369_676e;
pub const DOMAIN_INIT: u64 = 0x696e_6974;
pub const DOMAIN_SHUFFLE: u64 = 0x7368_7566;
pub const DOMAIN_EVAL: u64 = 0x6576_616c;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, domain: u64) -> u64 {
    mix(mix(seed) ^ domain)
}

pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, domain));
    rng.set_stream(index);
    rng
}
