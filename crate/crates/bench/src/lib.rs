//! Criterion benchmarks for the Sobolev toolkit live in `benches/`.
