//! Benchmarks for impulse-core.
