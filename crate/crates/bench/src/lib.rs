//! Shared inputs for the benchmarks.

use dhls_core::GridSpec;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

/// Unit grids of increasing size in each dimension, the largest near 4096
/// points.
pub fn matvec_grids() -> Vec<GridSpec> {
    [(1, 256), (1, 1024), (1, 4096), (2, 16), (2, 32), (2, 64), (3, 8), (3, 16)]
        .into_iter()
        .map(|(n, side)| GridSpec::unit(n, side).expect("valid bench grid"))
        .collect()
}

pub fn seeded_vector(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}
