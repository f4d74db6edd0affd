//! Seeded random streams.
//!
//! Everything stochastic takes an explicit stream. Per-sample work that may
//! run on a thread pool gets its own ChaCha stream keyed by sample index, so
//! results do not depend on how the work is scheduled.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-stream `index` of the generator keyed by `base`.
pub fn substream(base: u64, index: u64) -> Stream {
    let mut r = ChaCha8Rng::seed_from_u64(base);
    r.set_stream(index);
    r
}

/// Draws a fresh key for a family of sub-streams.
pub fn fork_key<R: RngCore + ?Sized>(rng: &mut R) -> u64 {
    rng.next_u64()
}
