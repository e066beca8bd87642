//! Fixtures shared by the benchmarks.

use splogsum::{generate, Dataset, SimConfig};

/// Standardized training-sized slice of the simulation design (210 rows is
/// the 70% share of a 300-sample replicate).
pub fn training_set(n: usize, p: usize, seed: u64) -> Dataset {
    let (d, _) = generate(&SimConfig::new(n, p, 0.2, 0.3, seed)).expect("valid simulation settings");
    d.standardize().expect("simulated columns are never constant").0
}
