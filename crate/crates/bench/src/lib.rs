//! Criterion benchmarks for privopt live under `benches/`.
