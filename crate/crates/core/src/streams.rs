//! Derivation of independent random streams from a campaign seed.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by a
//! purpose tag and an index, so that the draws seen by one UE or one block
//! do not depend on what the protocol did earlier. This keeps campaigns
//! with different protocols on common random numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const TAG_DROP: u64 = 0x6472_6f70;
pub(crate) const TAG_BLOCK: u64 = 0x626c_6f63;
pub(crate) const TAG_CALIBRATE: u64 = 0x6361_6c69;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(seed ^ splitmix64(tag)) ^ index);
    ChaCha8Rng::seed_from_u64(key)
}
