//! Local exponential time integration of semi-discretized PDEs.
//!
//! The global matrix exponential of an exponential integrator is replaced by
//! independent exponentials of the operator restricted to overlapping
//! subdomains. Each subdomain carries a buffer zone that absorbs the far
//! field within one step; after the local steps, buffer values are discarded
//! and every node keeps the value computed by the subdomain that owns it.
//!
//! Modules:
//! * [`sparse`] and [`dense`]: operator storage and kernels.
//! * [`expm`]: matrix exponential, φ-functions, Krylov actions, decay bounds.
//! * [`models`]: semi-discrete benchmark problems.
//! * [`partition`]: overlapping decompositions and local systems.
//! * [`steppers`]: exponential and classical integrators, the local driver.
//! * [`report`]: run reports and error norms.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dense;
pub mod error;
pub mod expm;
pub mod models;
pub mod partition;
pub mod report;
pub mod scalar;
pub mod sparse;
pub mod steppers;

pub use num_complex::Complex64;

pub use dense::DenseMatrix;
pub use error::{LemError, Result};
pub use expm::{expm_dense, iserles_bound, phi_action_krylov, phi_k_dense, verify_decay, DecayBound, KrylovSettings, PhiEvaluator, PhiMode, Topology};
pub use models::{stability_params, Mesh, SemiDiscreteSystem, StabilityParams};
pub use partition::{gather_overwrite, make_partition, ExteriorData, Layout, Partition};
pub use report::{error_norms, ErrorNorms, RunMetrics, RunReport};
pub use scalar::Scalar;
pub use sparse::{IndexSet, SparseMatrix};
pub use steppers::{run_global, run_lem, run_reference, Method, StepperConfig};
