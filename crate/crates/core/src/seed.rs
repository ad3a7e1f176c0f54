//! Deterministic seed derivation.
//!
//! Every random stream in the crate (initialization, shuffling, dropout,
//! partitioning) is a ChaCha8 generator keyed by a seed derived from the run
//! seed plus a path of integers (client id, epoch, sample index, ...). Streams
//! therefore do not depend on scheduling order, which keeps parallel runs
//! bit-identical to sequential ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `parts` into `base`, producing an independent child seed.
pub fn derive(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(base.wrapping_add(GOLDEN)), |acc, &p| {
        splitmix(acc ^ splitmix(p.wrapping_add(GOLDEN)))
    })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream tags, so that e.g. the shuffle stream of client 0 never collides
/// with its dropout stream.
pub(crate) mod tag {
    pub const INIT: u64 = 1;
    pub const PARTITION: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const DROPOUT: u64 = 5;
    pub const VALIDATION: u64 = 6;
}
