//! Criterion benchmarks for `ellipk-core`; run with `cargo bench -p ellipk-bench`.

/// Decimal targets exercised by the benchmarks.
pub const TARGETS: [u32; 3] = [500, 1000, 2000];
