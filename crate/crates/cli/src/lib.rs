//! Benchmark harness for local exponential methods: configuration files,
//! parameter sweeps, CSV reports, decay profiles and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod decay;
pub mod report;
pub mod sweep;

pub use config::{parse_config, parse_config_str, BenchCase, CaseKind, Cell, Oracle, StepTarget};
pub use decay::{decay_profile, emit_decay_profile};
pub use report::{emit_csv, parse_csv, ReportRow};
pub use sweep::run_sweep;
