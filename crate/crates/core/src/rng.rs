//! Seeded random streams. Each consumer gets its own stream so that adding
//! randomness in one component never shifts the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    EnvReset = 1,
    Agent = 2,
    Attacker = 3,
    Similarity = 4,
    Evaluation = 5,
}

/// Generator for `(seed, stream)`.
pub fn stream(seed: u64, which: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Generator for `(seed, stream, index)`; used for per-episode or per-cell
/// draws that must not depend on evaluation order.
pub fn substream(seed: u64, which: Stream, index: u64) -> Rng {
    let mixed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17)
        ^ index.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    rng.set_stream(which as u64);
    rng
}
