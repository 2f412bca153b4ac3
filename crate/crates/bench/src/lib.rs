//! Criterion benchmarks for `epps-core`; see `benches/`.
