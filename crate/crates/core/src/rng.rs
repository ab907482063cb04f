//! Seeded, stream-separated random number generators.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for replica/run `stream` of an experiment seeded with `seed`.
///
/// Streams of the same seed never overlap, so replicas can run in any order
/// (or in parallel) and still reproduce bit-identical results.
pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
