//! Fixtures shared by the criterion benchmarks.

use eikon::{benchmark, BenchmarkInstance, SolverConfig};

/// The unit-disk benchmark with a solver configuration at `1 / per_unit`.
pub fn disk(per_unit: u32) -> (BenchmarkInstance, SolverConfig) {
    (
        benchmark("unit-disk").expect("registered benchmark"),
        SolverConfig::new(1.0 / per_unit as f64),
    )
}
