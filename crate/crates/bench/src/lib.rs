//! Benchmarks for `tlg-core`; see `benches/`.
