//! Run results and error measures.

use crate::error::{LemError, Result};
use crate::models::StabilityParams;
use crate::scalar::{norm2, norm_inf, Scalar};
use crate::steppers::Method;

/// Relative errors `‖u - ref‖ / ‖ref‖` in the 2- and max-norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2_rel: f64,
    pub linf_rel: f64,
}

pub fn error_norms<T: Scalar>(u: &[T], reference: &[T]) -> Result<ErrorNorms> {
    if u.len() != reference.len() {
        return Err(LemError::DimensionMismatch { expected: reference.len(), got: u.len() });
    }
    let (r2, rinf) = (norm2(reference), norm_inf(reference));
    if r2 == 0.0 {
        return Err(LemError::InvalidParameter("reference solution has zero norm".into()));
    }
    let diff: Vec<T> = u.iter().zip(reference).map(|(a, b)| *a - *b).collect();
    Ok(ErrorNorms { l2_rel: norm2(&diff) / r2, linf_rel: norm_inf(&diff) / rinf })
}

/// Counters accumulated over a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    /// Wall time of the stepping loop, φ setup included.
    pub wall_seconds: f64,
    pub steps: usize,
    /// φ evaluators built (one per subdomain per refresh).
    pub phi_builds: usize,
    pub phi_applications: usize,
    pub krylov_dim_total: usize,
    pub krylov_dim_max: usize,
    pub krylov_unconverged: usize,
}

impl RunMetrics {
    /// Mean Krylov dimension over Krylov applications, if there were any.
    pub fn krylov_avg_dim(&self) -> Option<f64> {
        (self.krylov_dim_total > 0).then(|| self.krylov_dim_total as f64 / self.phi_applications.max(1) as f64)
    }

    pub(crate) fn merge(&mut self, other: &RunMetrics) {
        self.phi_builds += other.phi_builds;
        self.phi_applications += other.phi_applications;
        self.krylov_dim_total += other.krylov_dim_total;
        self.krylov_dim_max = self.krylov_dim_max.max(other.krylov_dim_max);
        self.krylov_unconverged += other.krylov_unconverged;
    }
}

/// Outcome of one global or local run.
#[derive(Debug, Clone)]
pub struct RunReport<T> {
    pub method: Method,
    /// Step actually taken: `t_end / steps`.
    pub dt: f64,
    pub t_end: f64,
    pub subdomains: usize,
    pub buffer: usize,
    pub workers: usize,
    /// Stability parameters of the initial state at the step taken.
    pub stability: StabilityParams,
    pub dof_updates_per_step: usize,
    pub metrics: RunMetrics,
    pub warnings: Vec<String>,
    pub final_state: Vec<T>,
    /// States after every step, when recording was requested.
    pub trajectory: Vec<Vec<T>>,
}
