//! Seeded, splittable random streams.
//!
//! Every sampler takes an explicit `&mut R: Rng`. Independent chains get
//! independent ChaCha streams keyed by `(seed, stream)`, so results do not
//! depend on how chains are spread over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

/// The RNG for chain number `stream` under master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
