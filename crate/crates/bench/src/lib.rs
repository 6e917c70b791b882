//! Benchmark-only crate; see `benches/core_numerics.rs`.

pub use mather_core;
