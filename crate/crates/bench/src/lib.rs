//! Inputs shared by the benchmarks.

use revtp_core::reduction::build_constraints;
use revtp_core::ReducedLpp;
use revtp_core::simulation::nth_situation;

/// `count` reproducible constraint systems for `m x n` situations.
pub fn systems(m: usize, n: usize, count: u64) -> Vec<ReducedLpp> {
    (0..count)
        .map(|i| build_constraints(&nth_situation(42, i, m, n, (1, 100)).expect("situation")))
        .collect()
}

/// Deterministic objective of length `d`.
pub fn objective(d: usize) -> Vec<f64> {
    (0..d).map(|k| ((k * 7 + 3) % 11) as f64 - 5.0).collect()
}
