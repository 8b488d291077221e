//! Named random sub-streams derived from a single seed.
//!
//! Each stream is keyed by `(seed, label, index)`, so adding restarts or
//! samples never perturbs the draws of existing ones.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ fnv1a(label)) ^ splitmix64(index.wrapping_add(1)))
}

pub fn stream(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, label, index))
}

/// `len` standard normal draws from the stream `(seed, label, index)`.
pub fn gaussians(seed: u64, label: &str, index: u64, len: usize) -> Vec<f64> {
    let mut rng = stream(seed, label, index);
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// `len` uniform ±1 draws from the stream `(seed, label, index)`.
pub fn signs(seed: u64, label: &str, index: u64, len: usize) -> Vec<f64> {
    let mut rng = stream(seed, label, index);
    (0..len)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}
