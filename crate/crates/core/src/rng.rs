//! Counter-based seed derivation.
//!
//! Every random stream in the crate is keyed by a master seed plus a path of
//! integer tags (stream kind, emitter index, sweep index, ...). A child seed
//! depends only on its key, never on how many draws other streams consumed,
//! so parallel generation is order-independent and reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Concrete generator used for every stream.
pub type StreamRng = ChaCha8Rng;

/// Stream tags. Kept distinct so that two uses of the same index never
/// collide.
pub mod stream {
    pub const COUNTS: u64 = 0x636f_756e_7473;
    pub const BIAS: u64 = 0x6269_6173;
    pub const POINTS: u64 = 0x706f_696e_7473;
    pub const WORST_IMAGE: u64 = 0x776f_7273_74;
    pub const JOB: u64 = 0x6a6f_62;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and a tag path.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(master), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// A generator for the stream identified by `master` and `tags`.
pub fn stream_rng(master: u64, tags: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, tags))
}
