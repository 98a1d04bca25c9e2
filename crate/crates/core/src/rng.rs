//! Seeded random numbers.
//!
//! All randomness goes through ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded
//! from a `u64`, so fields generated from a seed are identical on every
//! platform and thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Rng = ChaCha20Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha20Rng::seed_from_u64(seed)
}
