//! Model construction and (method, D, B, dt) sweeps.

use anyhow::{bail, Result};
use lem_core::models::{
    build_advdiff_1d, build_advdiff_2d, build_burgers_1d, build_burgers_2d, build_fv_advection_1d, build_porous_1d, build_schrodinger_1d,
    exact_advdiff_fourier, stability_params, AdvDiff1d, AdvDiff2d, BarenblattParams, Burgers1d, Burgers2d, FvAdvection1d, Porous1d,
    Schrodinger1d, SemiDiscreteSystem,
};
use lem_core::partition::{make_partition, Layout};
use lem_core::report::error_norms;
use lem_core::steppers::{run_global, run_lem, run_reference, Method, StepperConfig};
use lem_core::{LemError, Scalar};
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{BenchCase, CaseKind, Oracle, StepTarget};
use crate::report::ReportRow;

pub enum Model {
    AdvDiff1d(AdvDiff1d),
    Schrodinger1d(Schrodinger1d),
    FvAdvection1d(FvAdvection1d),
    Burgers1d(Burgers1d),
    Porous1d(Porous1d),
    AdvDiff2d(AdvDiff2d),
    Burgers2d(Burgers2d),
}

/// Evaluates `$body` with `$sys` bound to the concrete system of a [`Model`].
#[macro_export]
macro_rules! with_model {
    ($model:expr, $sys:ident => $body:expr) => {
        match $model {
            $crate::sweep::Model::AdvDiff1d($sys) => $body,
            $crate::sweep::Model::Schrodinger1d($sys) => $body,
            $crate::sweep::Model::FvAdvection1d($sys) => $body,
            $crate::sweep::Model::Burgers1d($sys) => $body,
            $crate::sweep::Model::Porous1d($sys) => $body,
            $crate::sweep::Model::AdvDiff2d($sys) => $body,
            $crate::sweep::Model::Burgers2d($sys) => $body,
        }
    };
}

pub fn build_model(case: &BenchCase) -> Result<Model> {
    let p = &case.params;
    Ok(match case.kind {
        CaseKind::AdvDiff1d => Model::AdvDiff1d(build_advdiff_1d(p.n, p.length, p.velocity, p.nu)?),
        CaseKind::Schrodinger1d => Model::Schrodinger1d(build_schrodinger_1d(p.n, p.length, p.kappa)?),
        CaseKind::FvAdvection1d => Model::FvAdvection1d(build_fv_advection_1d(p.n, p.length, p.velocity)?),
        CaseKind::Burgers1d => Model::Burgers1d(build_burgers_1d(p.n, p.length, p.nu)?),
        CaseKind::Porous1d => Model::Porous1d(build_porous_1d(p.n, p.length, BarenblattParams::new(p.m, p.amp, p.t0)?)?),
        CaseKind::AdvDiff2d => Model::AdvDiff2d(build_advdiff_2d(p.n, p.ny, p.length, p.height, p.omega, p.nu)?),
        CaseKind::Burgers2d => Model::Burgers2d(build_burgers_2d(p.n, p.ny, p.length, p.nu, p.anisotropy)?),
    })
}

pub fn layout_for(kind: CaseKind) -> Layout {
    if kind.is_2d() {
        Layout::Columns2D
    } else {
        Layout::Blocks1D
    }
}

/// Step size hitting a Courant or diffusion target for the initial state.
pub fn resolve_dt<T: Scalar, S: SemiDiscreteSystem<T> + ?Sized>(system: &S, target: StepTarget) -> Result<f64> {
    let unit = stability_params(system, &system.initial_state(), 1.0);
    let (per_unit, value, what) = match target {
        StepTarget::Dt(dt) => return Ok(dt),
        StepTarget::Courant(c) => (unit.courant, c, "Courant number"),
        StepTarget::Mu(mu) => (unit.mu, mu, "diffusion parameter"),
    };
    if per_unit <= 0.0 {
        bail!("{} has no {what} (no {} transport); give dt instead", system.name(), if what.starts_with('C') { "advective" } else { "diffusive" });
    }
    Ok(value / per_unit)
}

/// Error reference at `t_end` and an optional caveat about its quality.
pub struct Reference<T> {
    pub state: Vec<T>,
    pub warning: Option<String>,
}

impl<T> Reference<T> {
    fn exact(state: Vec<T>) -> Self {
        Self { state, warning: None }
    }
}

fn adaptive_reference<T: Scalar, R: lem_core::models::Rhs<T> + ?Sized>(system: &R, u0: &[T], case: &BenchCase) -> Result<Reference<T>> {
    let r = run_reference(system, u0, case.t_end, case.reference_tol)?;
    let warning = (!r.consistent()).then(|| format!("reference self-check gap {:.1e} exceeds 10x tol", r.self_check.unwrap_or(f64::NAN)));
    Ok(Reference { state: r.state, warning })
}

#[derive(Debug, Clone, Copy)]
struct Job {
    method: Method,
    subdomains: usize,
    buffer: usize,
    dt: f64,
}

/// Runs every (method, D, B, dt) combination of a case. D = 1 is the global
/// method and always reports B = 0; classical methods run once per step.
/// Combinations whose interiors are not wider than the buffer are skipped
/// with a log line; other failures become rows with NaN errors.
pub fn run_sweep(case: &BenchCase, workers: usize, timing: bool) -> Result<Vec<ReportRow>> {
    let model = build_model(case)?;
    match &model {
        Model::AdvDiff1d(s) if case.oracle == Oracle::FourierExact => {
            let reference = Reference::exact(exact_advdiff_fourier(s, case.t_end)?);
            sweep_system(case, s, &reference, workers, timing)
        }
        Model::Schrodinger1d(s) => {
            let reference = adaptive_reference(&s.pseudospectral(), &s.initial_state(), case)?;
            sweep_system(case, s, &reference, workers, timing)
        }
        Model::FvAdvection1d(s) if case.oracle == Oracle::ExactTranslation => {
            sweep_system(case, s, &Reference::exact(s.exact(case.t_end)), workers, timing)
        }
        Model::Porous1d(s) if case.oracle == Oracle::BarenblattExact => {
            sweep_system(case, s, &Reference::exact(s.exact(case.t_end)), workers, timing)
        }
        other => with_model!(other, s => {
            let reference = adaptive_reference(s, &s.initial_state(), case)?;
            sweep_system(case, s, &reference, workers, timing)
        }),
    }
}

fn sweep_system<T: Scalar, S: SemiDiscreteSystem<T>>(case: &BenchCase, system: &S, reference: &Reference<T>, workers: usize, timing: bool) -> Result<Vec<ReportRow>> {
    let layout = layout_for(case.kind);
    let mut jobs = Vec::new();
    for cell in &case.cells {
        let dt = resolve_dt(system, cell.target)?;
        for &method in &case.methods {
            if !method.is_exponential() {
                jobs.push(Job { method, subdomains: 1, buffer: 0, dt });
                continue;
            }
            for &d in &case.subdomains {
                let buffer = if d == 1 { 0 } else { cell.buffer };
                if let Err(LemError::BufferTooWide { interior, buffer }) = make_partition(system.mesh(), d, buffer, layout) {
                    info!(
                        "{}: skipping {method} D={d} B={buffer} at {:?}: subdomains of {interior} nodes would be no larger than their buffer regions",
                        case.kind, cell.target
                    );
                    continue;
                }
                jobs.push(Job { method, subdomains: d, buffer, dt });
            }
        }
    }
    let run = |job: &Job| run_job(case, system, reference, job, workers, timing);
    let mut rows: Vec<ReportRow> = if timing { jobs.iter().map(run).collect() } else { jobs.par_iter().map(run).collect() };
    rows.sort_by(|a, b| (a.method, a.dt, a.subdomains, a.buffer).partial_cmp(&(b.method, b.dt, b.subdomains, b.buffer)).expect("finite step sizes"));
    Ok(rows)
}

fn run_job<T: Scalar, S: SemiDiscreteSystem<T>>(case: &BenchCase, system: &S, reference: &Reference<T>, job: &Job, workers: usize, timing: bool) -> ReportRow {
    let mut cfg = StepperConfig::new(job.method, job.dt, case.t_end);
    cfg.jacobian_refresh_every = case.refresh;
    cfg.phi_mode = case.phi_mode;
    cfg.krylov = case.krylov;
    cfg.reference_tol = case.reference_tol;
    cfg.workers = workers;
    cfg.exterior = case.exterior;
    let u0 = system.initial_state();
    let planned = stability_params(system, &u0, cfg.step_size());
    let mut row = ReportRow {
        case: case.kind.name().to_owned(),
        method: job.method,
        subdomains: job.subdomains,
        buffer: job.buffer,
        courant: planned.courant,
        mu: planned.mu,
        dt: cfg.step_size(),
        wall_seconds: f64::NAN,
        err_l2_rel: f64::NAN,
        err_linf_rel: f64::NAN,
        dof_updates_per_step: system.dim(),
        warnings: String::new(),
    };
    let mut warnings: Vec<String> = reference.warning.iter().cloned().collect();
    let outcome = if job.subdomains == 1 {
        run_global(system, &cfg)
    } else {
        make_partition(system.mesh(), job.subdomains, job.buffer, layout_for(case.kind)).and_then(|part| {
            row.dof_updates_per_step = part.dof_updates_per_step();
            run_lem(system, &part, &cfg)
        })
    };
    let outcome = outcome.map_err(anyhow::Error::from).and_then(|report| Ok((error_norms(&report.final_state, &reference.state)?, report)));
    match outcome {
        Ok((err, report)) => {
            row.err_l2_rel = err.l2_rel;
            row.err_linf_rel = err.linf_rel;
            row.dof_updates_per_step = report.dof_updates_per_step;
            if timing {
                row.wall_seconds = report.metrics.wall_seconds;
            }
            if let Some(k) = report.metrics.krylov_avg_dim() {
                info!("{} {} D={} dt={:e}: mean Krylov dimension {k:.1}", row.case, row.method, row.subdomains, row.dt);
            }
            warnings.extend(report.warnings);
        }
        Err(e) => {
            warn!("{} {} D={} B={} dt={:e} failed: {e:#}", row.case, row.method, row.subdomains, row.buffer, row.dt);
            warnings.push(format!("failed: {e:#}"));
        }
    }
    row.warnings = warnings.join("; ");
    row
}
