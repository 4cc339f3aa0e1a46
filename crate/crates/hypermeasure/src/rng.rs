//! Seeded randomness shared by the sampled checks and the resampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The one generator used throughout: seeded, portable, reproducible.
pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from `[lo, hi)`.
pub fn uniform(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}
