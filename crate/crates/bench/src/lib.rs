//! Criterion benchmarks for `unitbound`; see `benches/`.
