//! Seeded random streams. Every consumer derives its generator from a
//! `(seed, stream)` pair so that independent pieces of a computation never
//! share state and results do not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fixed stream ids used by instance generation.
pub(crate) mod ids {
    pub const DESIGN: u64 = 1;
    pub const SIGNAL: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const SE_SIGNAL: u64 = 16;
    pub const SE_NOISE: u64 = 17;
    pub const QQ: u64 = 32;
    pub const POWER: u64 = 64;
}
