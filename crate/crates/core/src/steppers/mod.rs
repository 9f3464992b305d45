//! Time integrators and the drivers that run them globally or on an
//! overlapping partition.
//!
//! Exponential methods:
//! * exponential Euler, `u + dt φ1(dt A)(A u + g)`, for linear systems;
//! * Rosenbrock-Euler (`exprb2`), `u + dt φ1(dt J) F(u)`;
//! * `exprb3`, which corrects the Rosenbrock-Euler stage `U` by
//!   `2 dt φ3(dt J)(N(U) - N(u))` with `N(v) = F(v) - J v`.
//!
//! Both Rosenbrock methods reduce to exponential Euler on linear problems.
//! The Jacobian and its φ-functions are frozen between refreshes.

mod explicit;
mod implicit;

pub use explicit::{integrate_dp45, run_reference, step_rk2, step_rk3, step_rk4, ReferenceSolution};
pub use implicit::{step_crank_nicolson, BandedLu, ShiftedSolver};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{LemError, Result};
use crate::expm::{KrylovSettings, PhiEvaluator, PhiMode};
use crate::models::{stability_params, SemiDiscreteSystem};
use crate::partition::{extract_local_with, gather_overwrite, ExteriorData, LocalSystem, Partition};
use crate::report::{RunMetrics, RunReport};
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    ExpEuler,
    ExpRB2,
    ExpRB3,
    Rk2,
    Rk3,
    Rk4,
    CrankNicolson,
    AdaptiveReference,
}

impl Method {
    pub const ALL: [Method; 8] =
        [Method::ExpEuler, Method::ExpRB2, Method::ExpRB3, Method::Rk2, Method::Rk3, Method::Rk4, Method::CrankNicolson, Method::AdaptiveReference];

    pub fn name(self) -> &'static str {
        match self {
            Method::ExpEuler => "expeuler",
            Method::ExpRB2 => "exprb2",
            Method::ExpRB3 => "exprb3",
            Method::Rk2 => "rk2",
            Method::Rk3 => "rk3",
            Method::Rk4 => "rk4",
            Method::CrankNicolson => "cn",
            Method::AdaptiveReference => "reference",
        }
    }

    pub fn is_exponential(self) -> bool {
        matches!(self, Method::ExpEuler | Method::ExpRB2 | Method::ExpRB3)
    }

    /// Highest φ-function the method applies.
    fn phi_order(self) -> usize {
        if self == Method::ExpRB3 {
            3
        } else {
            1
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = LemError;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| !matches!(c, '_' | '-' | ' ')).collect::<String>().to_ascii_lowercase();
        Ok(match key.as_str() {
            "expeuler" => Method::ExpEuler,
            "exprb2" => Method::ExpRB2,
            "exprb3" => Method::ExpRB3,
            "rk2" => Method::Rk2,
            "rk3" => Method::Rk3,
            "rk4" => Method::Rk4,
            "cn" | "cranknicolson" => Method::CrankNicolson,
            "reference" | "adaptivereference" | "dp45" => Method::AdaptiveReference,
            _ => return Err(LemError::InvalidParameter(format!("unknown method '{s}'"))),
        })
    }
}

/// Steps between Jacobian refreshes for nonlinear runs.
pub const DEFAULT_REFRESH: usize = 5;
pub const DEFAULT_REFERENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StepperConfig {
    pub method: Method,
    /// Requested step; the step taken is `t_end / ceil(t_end / dt)`.
    pub dt: f64,
    pub t_end: f64,
    /// Steps between Jacobian and φ rebuilds; ignored for linear systems,
    /// whose φ-functions are built once.
    pub jacobian_refresh_every: usize,
    pub phi_mode: PhiMode,
    pub krylov: KrylovSettings,
    pub reference_tol: f64,
    /// Worker threads for the per-subdomain loop.
    pub workers: usize,
    pub exterior: ExteriorData,
    pub record_trajectory: bool,
}

impl StepperConfig {
    pub fn new(method: Method, dt: f64, t_end: f64) -> Self {
        Self {
            method,
            dt,
            t_end,
            jacobian_refresh_every: DEFAULT_REFRESH,
            phi_mode: PhiMode::DenseStored,
            krylov: KrylovSettings::default(),
            reference_tol: DEFAULT_REFERENCE_TOL,
            workers: 1,
            exterior: ExteriorData::Frozen,
            record_trajectory: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(LemError::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(LemError::InvalidParameter(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.jacobian_refresh_every == 0 {
            return Err(LemError::InvalidParameter("jacobian refresh period must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(LemError::InvalidParameter("worker count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt - 1e-9).ceil() as usize).max(1)
    }

    pub fn step_size(&self) -> f64 {
        self.t_end / self.steps() as f64
    }
}

fn apply_phi<T: Scalar>(phi: &PhiEvaluator<T>, k: usize, v: &[T], metrics: &mut RunMetrics) -> Result<Vec<T>> {
    let r = phi.apply(k, v)?;
    metrics.phi_applications += 1;
    if let Some(dim) = r.krylov_dim {
        metrics.krylov_dim_total += dim;
        metrics.krylov_dim_max = metrics.krylov_dim_max.max(dim);
    }
    if !r.converged {
        metrics.krylov_unconverged += 1;
    }
    Ok(r.value)
}

fn check_step(phi: &PhiEvaluator<impl Scalar>, dt: f64) -> Result<()> {
    if (phi.dt() - dt).abs() > 1e-12 * dt.abs() {
        return Err(LemError::InvalidParameter(format!("φ evaluator built for dt = {} but stepping with dt = {dt}", phi.dt())));
    }
    Ok(())
}

/// `u + dt φ1 f`.
fn euler_update<T: Scalar>(u: &[T], f: &[T], dt: f64, phi: &PhiEvaluator<T>, metrics: &mut RunMetrics) -> Result<Vec<T>> {
    let w = apply_phi(phi, 1, f, metrics)?;
    let h = T::from_real(dt);
    Ok(u.iter().zip(w).map(|(a, b)| *a + h * b).collect())
}

fn exprb3_update<T: Scalar>(
    u: &[T],
    f: &[T],
    dt: f64,
    jacobian: &SparseMatrix<T>,
    phi: &PhiEvaluator<T>,
    rhs_at: impl Fn(&[T]) -> Vec<T>,
    metrics: &mut RunMetrics,
) -> Result<Vec<T>> {
    let stage = euler_update(u, f, dt, phi, metrics)?;
    let f_stage = rhs_at(&stage);
    let delta: Vec<T> = stage.iter().zip(u).map(|(a, b)| *a - *b).collect();
    let j_delta = jacobian.matvec(&delta)?;
    // N(U) - N(u) = F(U) - F(u) - J (U - u)
    let defect: Vec<T> = f_stage.iter().zip(f).zip(j_delta).map(|((a, b), c)| *a - *b - c).collect();
    let w = apply_phi(phi, 3, &defect, metrics)?;
    let h = T::from_real(2.0 * dt);
    Ok(stage.iter().zip(w).map(|(a, b)| *a + h * b).collect())
}

/// One exponential Euler step; `phi` must hold `φ1(dt A)`.
pub fn step_exp_euler<T: Scalar, S: SemiDiscreteSystem<T> + ?Sized>(system: &S, u: &[T], t: f64, dt: f64, phi: &PhiEvaluator<T>) -> Result<Vec<T>> {
    if !system.is_linear() {
        return Err(LemError::Unsupported(format!("exponential Euler needs a linear system; {} is nonlinear, use exprb2", system.name())));
    }
    check_step(phi, dt)?;
    euler_update(u, &system.rhs(u, t), dt, phi, &mut RunMetrics::default())
}

/// One Rosenbrock-Euler step; `phi` holds `φ1(dt J)` for the frozen `J`.
pub fn step_exprb2<T: Scalar, S: SemiDiscreteSystem<T> + ?Sized>(system: &S, u: &[T], t: f64, dt: f64, phi: &PhiEvaluator<T>) -> Result<Vec<T>> {
    check_step(phi, dt)?;
    euler_update(u, &system.rhs(u, t), dt, phi, &mut RunMetrics::default())
}

/// One `exprb3` step with frozen Jacobian `jacobian`; `phi` must hold
/// `φ1` through `φ3` of `dt J`.
pub fn step_exprb3<T: Scalar, S: SemiDiscreteSystem<T> + ?Sized>(
    system: &S,
    u: &[T],
    t: f64,
    dt: f64,
    jacobian: &SparseMatrix<T>,
    phi: &PhiEvaluator<T>,
) -> Result<Vec<T>> {
    check_step(phi, dt)?;
    let f = system.rhs(u, t);
    exprb3_update(u, &f, dt, jacobian, phi, |v| system.rhs(v, t), &mut RunMetrics::default())
}

fn check_finite<T: Scalar>(u: &[T], step: usize) -> Result<()> {
    if u.iter().any(|v| !v.is_finite()) {
        return Err(LemError::NonFinite(format!("state after step {}", step + 1)));
    }
    Ok(())
}

fn krylov_warnings(metrics: &RunMetrics) -> Vec<String> {
    if metrics.krylov_unconverged == 0 {
        return Vec::new();
    }
    vec![format!("{} Krylov applications reached m_max without meeting the tolerance", metrics.krylov_unconverged)]
}

/// Integrates on the whole mesh from the system's initial state.
pub fn run_global<T: Scalar, S: SemiDiscreteSystem<T> + ?Sized>(system: &S, cfg: &StepperConfig) -> Result<RunReport<T>> {
    run_global_from(system, &system.initial_state(), cfg)
}

pub fn run_global_from<T: Scalar, S: SemiDiscreteSystem<T> + ?Sized>(system: &S, u0: &[T], cfg: &StepperConfig) -> Result<RunReport<T>> {
    cfg.validate()?;
    if u0.len() != system.dim() {
        return Err(LemError::DimensionMismatch { expected: system.dim(), got: u0.len() });
    }
    let linear = system.is_linear();
    if cfg.method == Method::ExpEuler && !linear {
        return Err(LemError::Unsupported(format!("exponential Euler needs a linear system; {} is nonlinear", system.name())));
    }
    let mut steps = cfg.steps();
    let dt = cfg.step_size();
    let stability = stability_params(system, u0, dt);
    let mut metrics = RunMetrics::default();
    let mut trajectory = Vec::new();
    let mut u = u0.to_vec();
    let start = Instant::now();
    match cfg.method {
        Method::ExpEuler | Method::ExpRB2 | Method::ExpRB3 => {
            let mut cache: Option<(SparseMatrix<T>, PhiEvaluator<T>)> = None;
            for step in 0..steps {
                let t = step as f64 * dt;
                if cache.is_none() || (!linear && step % cfg.jacobian_refresh_every == 0) {
                    let jac = system.jacobian(&u);
                    let phi = PhiEvaluator::build(cfg.phi_mode, &jac, dt, cfg.method.phi_order(), cfg.krylov)?;
                    metrics.phi_builds += 1;
                    cache = Some((jac, phi));
                }
                let (jac, phi) = cache.as_ref().expect("cache filled above");
                let f = system.rhs(&u, t);
                u = match cfg.method {
                    Method::ExpRB3 => exprb3_update(&u, &f, dt, jac, phi, |v| system.rhs(v, t), &mut metrics)?,
                    _ => euler_update(&u, &f, dt, phi, &mut metrics)?,
                };
                check_finite(&u, step)?;
                if cfg.record_trajectory {
                    trajectory.push(u.clone());
                }
            }
        }
        Method::Rk2 | Method::Rk3 | Method::Rk4 => {
            let step_fn = match cfg.method {
                Method::Rk2 => step_rk2::<T, S>,
                Method::Rk3 => step_rk3::<T, S>,
                _ => step_rk4::<T, S>,
            };
            for step in 0..steps {
                u = step_fn(system, &u, step as f64 * dt, dt);
                check_finite(&u, step)?;
                if cfg.record_trajectory {
                    trajectory.push(u.clone());
                }
            }
        }
        Method::CrankNicolson => {
            let mut cache: Option<ShiftedSolver<T>> = None;
            for step in 0..steps {
                if cache.is_none() || (!linear && step % cfg.jacobian_refresh_every == 0) {
                    cache = Some(ShiftedSolver::new(&system.jacobian(&u), dt)?);
                }
                let f = system.rhs(&u, step as f64 * dt);
                u = step_crank_nicolson(&u, &f, dt, cache.as_ref().expect("cache filled above"));
                check_finite(&u, step)?;
                if cfg.record_trajectory {
                    trajectory.push(u.clone());
                }
            }
        }
        Method::AdaptiveReference => {
            let sol = integrate_dp45(system, &u, 0.0, cfg.t_end, cfg.reference_tol)?;
            steps = sol.accepted;
            u = sol.state;
        }
    }
    metrics.steps = steps;
    metrics.wall_seconds = start.elapsed().as_secs_f64();
    Ok(RunReport {
        method: cfg.method,
        dt,
        t_end: cfg.t_end,
        subdomains: 1,
        buffer: 0,
        workers: 1,
        stability,
        dof_updates_per_step: system.dim(),
        warnings: krylov_warnings(&metrics),
        metrics,
        final_state: u,
        trajectory,
    })
}

/// Per-subdomain state carried across steps.
struct LocalState<T: Scalar> {
    system: LocalSystem<T>,
    jacobian: Option<SparseMatrix<T>>,
    phi: Option<PhiEvaluator<T>>,
    metrics: RunMetrics,
    out: Vec<T>,
}

/// Local exponential method: every step, each subdomain advances its local
/// problem with exterior values frozen, then interiors are gathered.
pub fn run_lem<T: Scalar, S: SemiDiscreteSystem<T> + ?Sized>(system: &S, part: &Partition, cfg: &StepperConfig) -> Result<RunReport<T>> {
    run_lem_from(system, part, &system.initial_state(), cfg)
}

pub fn run_lem_from<T: Scalar, S: SemiDiscreteSystem<T> + ?Sized>(system: &S, part: &Partition, u0: &[T], cfg: &StepperConfig) -> Result<RunReport<T>> {
    cfg.validate()?;
    if !cfg.method.is_exponential() {
        return Err(LemError::Unsupported(format!("local stepping needs an exponential method, got {}", cfg.method)));
    }
    if part.dim() != system.dim() {
        return Err(LemError::DimensionMismatch { expected: system.dim(), got: part.dim() });
    }
    if u0.len() != system.dim() {
        return Err(LemError::DimensionMismatch { expected: system.dim(), got: u0.len() });
    }
    let linear = system.is_linear();
    if cfg.method == Method::ExpEuler && !linear {
        return Err(LemError::Unsupported(format!("exponential Euler needs a linear system; {} is nonlinear", system.name())));
    }
    let steps = cfg.steps();
    let dt = cfg.step_size();
    let stability = stability_params(system, u0, dt);
    let pool = if cfg.workers > 1 {
        Some(rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().map_err(|e| LemError::Unsupported(format!("worker pool: {e}")))?)
    } else {
        None
    };

    let start = Instant::now();
    let mut u = u0.to_vec();
    let mut locals = (0..part.count())
        .map(|i| {
            Ok(LocalState {
                system: extract_local_with(system, part, i, &u, cfg.exterior)?,
                jacobian: None,
                phi: None,
                metrics: RunMetrics::default(),
                out: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut trajectory = Vec::new();
    for step in 0..steps {
        let t = step as f64 * dt;
        let refresh = step == 0 || (!linear && step % cfg.jacobian_refresh_every == 0);
        let global_jacobian = (refresh && !linear && cfg.exterior == ExteriorData::Frozen).then(|| system.jacobian(&u));
        let state = &u;
        let advance = |local: &mut LocalState<T>| -> Result<()> {
            local.system.update_exterior(system, state)?;
            let v0 = local.system.initial_state();
            if refresh {
                let jac = match (local.system.matrix(), &global_jacobian) {
                    (Some(a), _) => a.clone(),
                    (None, Some(g)) => local.system.restrict_jacobian(g)?,
                    (None, None) => local.system.jacobian(system, &v0)?,
                };
                local.phi = Some(PhiEvaluator::build(cfg.phi_mode, &jac, dt, cfg.method.phi_order(), cfg.krylov)?);
                local.jacobian = Some(jac);
                local.metrics.phi_builds += 1;
            }
            let (jac, phi) = (local.jacobian.as_ref().expect("built at refresh"), local.phi.as_ref().expect("built at refresh"));
            let f = local.system.rhs(system, &v0, t);
            local.out = match cfg.method {
                Method::ExpRB3 => {
                    let sys = &local.system;
                    exprb3_update(&v0, &f, dt, jac, phi, |v| sys.rhs(system, v, t), &mut local.metrics)?
                }
                _ => euler_update(&v0, &f, dt, phi, &mut local.metrics)?,
            };
            Ok(())
        };
        let results: Vec<Result<()>> = match &pool {
            Some(pool) => pool.install(|| locals.par_iter_mut().map(advance).collect()),
            None => locals.iter_mut().map(advance).collect(),
        };
        results.into_iter().collect::<Result<()>>()?;
        let outs: Vec<Vec<T>> = locals.iter_mut().map(|l| std::mem::take(&mut l.out)).collect();
        gather_overwrite(part, &outs, &mut u)?;
        check_finite(&u, step)?;
        if cfg.record_trajectory {
            trajectory.push(u.clone());
        }
    }
    let mut metrics = RunMetrics::default();
    for local in &locals {
        metrics.merge(&local.metrics);
    }
    metrics.steps = steps;
    metrics.wall_seconds = start.elapsed().as_secs_f64();
    Ok(RunReport {
        method: cfg.method,
        dt,
        t_end: cfg.t_end,
        subdomains: part.count(),
        buffer: part.buffer_width(),
        workers: cfg.workers,
        stability,
        dof_updates_per_step: part.dof_updates_per_step(),
        warnings: krylov_warnings(&metrics),
        metrics,
        final_state: u,
        trajectory,
    })
}
