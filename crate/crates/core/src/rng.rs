//! Seeded random streams.
//!
//! Every Monte-Carlo trial draws from its own ChaCha8 stream keyed by the run
//! seed and selected by the trial index, so results do not depend on the
//! order trials are evaluated in or on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream reserved for Alice's protocol-level choices (sample selection,
/// check split, permutation, random codewords).
pub const ALICE_CONTROL_STREAM: u64 = u64::MAX;

/// Returns the independent stream `stream` of the run keyed by `seed`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
