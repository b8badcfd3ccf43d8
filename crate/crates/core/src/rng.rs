//! Seeded random streams.
//!
//! Every random quantity is drawn from a ChaCha stream keyed by a root seed
//! and a stream id, so any replication or subject can be reproduced alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; mixes a root seed with a tag into a child seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// Stream tags used by the simulation harness.
pub(crate) const TAG_REPLICATION: u64 = 0x5245_504c;
pub(crate) const TAG_PRIORS: u64 = 0x5052_494f;
pub(crate) const TAG_TIES_TARGET: u64 = 0x5449_4554;
pub(crate) const TAG_TIES_HOLDOUT: u64 = 0x5449_4548;
pub(crate) const TAG_ORACLE: u64 = 0x4f52_4143;
