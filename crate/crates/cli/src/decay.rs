//! Off-diagonal decay profiles of `exp(dt A)`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use lem_core::expm::{verify_decay, DecayReport, Topology};
use lem_core::models::{build_advection_dirichlet_1d, Boundary, SemiDiscreteSystem};
use lem_core::Scalar;

use crate::config::{BenchCase, CaseKind, StepTarget};
use crate::sweep::{build_model, resolve_dt};
use crate::with_model;

/// Cases accepted by [`decay_profile_for_case`]: the configuration cases plus
/// `advection1d`, pure advection with Dirichlet walls on `[0, 10]`.
pub const DECAY_CASES: &str = "advection1d, advdiff1d, schrodinger1d, fv_advection1d, burgers1d, porous1d, advdiff2d, burgers2d";

/// Decay profile of the operator of `system` (its Jacobian at the initial
/// state when nonlinear). Distances are cyclic on periodic meshes; on 2D
/// meshes they are distances in the flattened index.
pub fn decay_profile<T: Scalar, S: SemiDiscreteSystem<T> + ?Sized>(system: &S, dt: f64) -> Result<DecayReport> {
    let owned;
    let a = match system.linear_matrix() {
        Some(a) => a,
        None => {
            owned = system.jacobian(&system.initial_state());
            &owned
        }
    };
    let periodic = system.mesh().axes().iter().any(|ax| ax.boundary == Boundary::Periodic);
    let topology = if periodic && system.mesh().dim() == 1 { Topology::Cyclic } else { Topology::Banded };
    if periodic && system.mesh().dim() == 2 {
        bail!("decay profiles of periodic 2D operators are not supported");
    }
    Ok(verify_decay(a, dt, topology)?)
}

pub fn emit_decay_profile<T: Scalar, S: SemiDiscreteSystem<T> + ?Sized>(system: &S, dt: f64, path: &Path) -> Result<DecayReport> {
    let report = decay_profile(system, dt)?;
    std::fs::write(path, report.to_table()).with_context(|| format!("writing {}", path.display()))?;
    Ok(report)
}

/// Builds the named case with default parameters (and `n` unknowns per axis
/// when given) and profiles it at Courant number `courant`.
pub fn decay_profile_for_case(case: &str, courant: f64, n: Option<usize>) -> Result<DecayReport> {
    if !(courant > 0.0 && courant.is_finite()) {
        bail!("Courant number must be positive, got {courant}");
    }
    if case == "advection1d" {
        let n = n.unwrap_or(400);
        let system = build_advection_dirichlet_1d(n, 10.0, 1.0, 0.0)?;
        let dt = resolve_dt(&system, StepTarget::Courant(courant))?;
        return decay_profile(&system, dt);
    }
    let kind: CaseKind = case.parse().with_context(|| format!("expected one of {DECAY_CASES}"))?;
    let mut bench = BenchCase::new(kind);
    if let Some(n) = n {
        bench.params.n = n;
        if kind.is_2d() {
            bench.params.ny = n;
        }
    }
    let model = build_model(&bench)?;
    with_model!(&model, s => {
        let dt = resolve_dt(s, StepTarget::Courant(courant))?;
        decay_profile(s, dt)
    })
}
