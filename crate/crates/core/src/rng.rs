//! Seeded generators. ChaCha8 keeps streams stable across platforms and
//! `rand` releases, which the byte-identical output contract relies on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for iteration `i` of an experiment.
pub fn derive_seed(base: u64, iteration: usize) -> u64 {
    base ^ iteration as u64
}

/// `round(fraction * n)` with ties away from zero.
pub fn fraction_count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64).round() as usize
}
