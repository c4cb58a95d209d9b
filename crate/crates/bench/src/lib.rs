//! Benchmarks for the IFE pipeline: `cargo bench -p ife-bench`.
