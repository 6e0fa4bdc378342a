//! Shared corpus builders for the benchmark targets.

use prun_core::model::Batch;
use prun_core::rng::uniform_in;

/// Batch of `k` sizes drawn uniformly from `lo..=hi`.
pub fn hetero_batch(k: usize, lo: u64, hi: u64, cores: usize, seed: u64) -> Batch {
    let sizes: Vec<usize> =
        (0..k).map(|j| uniform_in(seed, 0, j as u64, lo, hi) as usize).collect();
    Batch::from_sizes(&sizes, cores).expect("generated sizes are positive")
}
