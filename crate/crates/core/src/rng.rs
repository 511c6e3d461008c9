//! Seeded, splittable randomness.
//!
//! Every randomized operation takes its generator explicitly. Independent
//! streams for trials are derived from one experiment seed with [`split`].

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Prng;

/// A generator seeded from a 64-bit seed.
pub fn seeded(seed: u64) -> Prng {
    Prng::seed_from_u64(seed)
}

/// Stream `stream` of the generator family keyed by `seed`.
///
/// Streams with different indices never overlap, so per-trial generators
/// can be handed to worker threads in any order without changing results.
pub fn split(seed: u64, stream: u64) -> Prng {
    let mut rng = Prng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
