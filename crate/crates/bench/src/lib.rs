//! Benchmark-only crate; see `benches/stepper.rs`.
