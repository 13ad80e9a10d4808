//! Benchmark harness crate; the benchmarks themselves are under `benches/`.
