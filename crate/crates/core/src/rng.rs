//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from `ChaCha8Rng`, a
//! counter-based generator with a 64-bit key (expanded from a `u64` seed by
//! `SeedableRng::seed_from_u64`) and an independent 64-bit stream id. A stream
//! is addressed by the pair `(seed, stream)`:
//!
//! * replication `i` of a sweep uses `stream_rng(seed, i)`;
//! * Monte Carlo chunk `j` of a population integral uses
//!   `stream_rng(seed, j)`, and the cached population means use stream ids
//!   offset by [`MEANS_STREAM_OFFSET`];
//! * independent sub-experiments (theta grid points, table rows) get their
//!   own base seed `derive_seed(seed, index) = seed ^ splitmix64(index)`.
//!
//! Results depend only on seeds and budgets, never on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Stream-id offset reserved for cached population means.
pub const MEANS_STREAM_OFFSET: u64 = 1 << 62;

/// Generator for stream `stream` under key `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer.
pub fn splitmix64(index: u64) -> u64 {
    let mut z = index.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Base seed of the `index`-th independent sub-experiment.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    seed ^ splitmix64(index)
}
