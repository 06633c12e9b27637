//! Criterion benchmarks for the cornerflow solver live in `benches/`.
