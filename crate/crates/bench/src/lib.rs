//! Criterion benchmarks for `redreg-core`; see `benches/`.
