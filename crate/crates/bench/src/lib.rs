//! Criterion benchmarks for dispatch, sizing and physics kernels; see `benches/planning.rs`.
