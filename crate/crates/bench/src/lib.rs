//! Criterion benchmarks for the dense exponential, φ construction and the
//! local and global stepping loops; see `benches/kernels.rs`.
