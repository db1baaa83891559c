//! Seeded random streams.
//!
//! Every consumer of randomness draws from a ChaCha8 generator keyed by the
//! user seed and a stream id. The stream id packs a purpose tag into the high
//! 32 bits and an index (restart, subject, fold, replicate) into the low 32
//! bits, so streams never overlap and parallel execution reproduces the
//! serial output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Restart = 1,
    Basis = 2,
    Subject = 3,
    Label = 4,
    Folds = 5,
    Replicate = 6,
    Bench = 7,
}

/// Generator for `(seed, purpose, index)`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 32) | (index & 0xffff_ffff));
    rng
}

/// Derives a child seed, used when a replicate needs a full seed of its own.
pub fn child_seed(seed: u64, purpose: Purpose, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, purpose, index).next_u64()
}
