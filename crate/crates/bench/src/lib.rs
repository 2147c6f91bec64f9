//! Criterion benchmarks for newsrank live under `benches/`.
