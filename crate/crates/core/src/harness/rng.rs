//! Seeded generators. Every random quantity in an experiment comes from a
//! `ChaCha8Rng` keyed by a recorded seed and a fixed stream number.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::vecmath::ParamVector;

pub const RNG_NAME: &str = "ChaCha8Rng/rand_chacha-0.9";

pub const TARGET_STREAM: u64 = 0;
pub const X0_STREAM: u64 = 1;

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// First `leading_ones` coordinates equal 1, the rest uniform in `[−range, range]`.
pub fn synthetic_target(dim: usize, leading_ones: usize, range: f64, seed: u64) -> ParamVector {
    let mut rng = seeded_rng(seed, TARGET_STREAM);
    (0..dim)
        .map(|i| {
            if i < leading_ones {
                1.0
            } else {
                rng.random_range(-range..=range)
            }
        })
        .collect()
}

pub fn uniform_vector(dim: usize, low: f64, high: f64, seed: u64) -> ParamVector {
    let mut rng = seeded_rng(seed, X0_STREAM);
    (0..dim).map(|_| rng.random_range(low..=high)).collect()
}
