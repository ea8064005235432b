//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by the
//! user seed. Independent work items (LC iterations, IMDP rows, sample batches)
//! each get their own stream id `tag << 48 | index`, so results do not depend on
//! evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Samples = 1,
    LcIteration = 2,
    EmpiricalRow = 3,
    Npe = 4,
    Scratch = 15,
}

pub fn stream_rng(seed: u64, tag: StreamTag, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((tag as u64) << 48) | (index & 0xffff_ffff_ffff));
    rng
}
