#![allow(dead_code)]

use nahm_core::spectral::{genericize, MonopoleConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn config(points: Vec<[f64; 3]>) -> MonopoleConfig {
    MonopoleConfig::new(points).unwrap()
}

pub fn e2() -> MonopoleConfig {
    config(vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
}

pub fn equilateral() -> MonopoleConfig {
    let h = 3f64.sqrt() / 2.0;
    config(vec![[1.0, 0.0, 0.0], [-0.5, h, 0.0], [-0.5, -h, 0.0]])
}

/// `n` points in a cube of side 3 with pairwise separation at least
/// `min_sep`, rotated to a generic frame.
pub fn random_generic(n: usize, seed: u64, min_sep: f64) -> MonopoleConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let pts: Vec<[f64; 3]> = (0..n).map(|_| std::array::from_fn(|_| rng.random_range(-1.5..1.5))).collect();
        let cfg = config(pts);
        if cfg.min_separation().map_or(true, |r| r >= min_sep) {
            return genericize(&cfg, seed).unwrap().1;
        }
    }
}

/// The seeded configurations used across the multi-point checks.
pub fn seeded_family() -> Vec<MonopoleConfig> {
    let mut out = Vec::new();
    for n in 2..=5 {
        for k in 0..3 {
            out.push(random_generic(n, 1000 * n as u64 + k, 0.5));
        }
    }
    out
}
