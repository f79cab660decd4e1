//! Criterion benchmarks for `dualep-core`; see `benches/`.
