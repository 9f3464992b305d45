//! Acceptance suite: twelve pass/fail checks of accuracy, locality,
//! convergence and cost structure.

use std::fmt;
use std::time::Instant;

use anyhow::{ensure, Result};
use lem_core::expm::{expm_dense, phi_action_krylov, phi_k_dense, verify_decay, KrylovSettings, PhiMode, Topology};
use lem_core::models::{
    build_advdiff_1d, build_advdiff_2d, build_advection_dirichlet_1d, build_burgers_1d, build_fv_advection_1d, build_porous_1d,
    build_schrodinger_1d, exact_advdiff_fourier, BarenblattParams, SemiDiscreteSystem,
};
use lem_core::partition::{make_partition, Layout};
use lem_core::report::{error_norms, RunReport};
use lem_core::scalar::{norm2, norm_inf};
use lem_core::steppers::{run_global, run_lem, run_reference, Method, StepperConfig};
use lem_core::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{BenchCase, CaseKind, Cell, StepTarget};
use crate::sweep::{resolve_dt, run_sweep};

pub const CRITERIA: [(u8, &str); 12] = [
    (1, "linear LEM accuracy"),
    (2, "LEM matches global at adequate overlap"),
    (3, "single subdomain equals global run"),
    (4, "Schrodinger accuracy and norm conservation"),
    (5, "finite-volume square wave errors"),
    (6, "convergence orders"),
    (7, "decay bound of the advection exponential"),
    (8, "Krylov fidelity"),
    (9, "porous medium refinement and locality"),
    (10, "LEM timing ratio and skipped cell"),
    (11, "dof update overhead identity"),
    (12, "2D rotation against RK4"),
];

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {:>2} {verdict} {}: {} [{:.1}s]", self.id, self.title, self.detail, self.seconds)
    }
}

/// Result of one check: whether it holds and the measured numbers.
type Check = Result<(bool, String)>;

pub fn run_criterion(id: u8) -> Outcome {
    let (_, title) = CRITERIA.iter().copied().find(|(k, _)| *k == id).unwrap_or((id, "unknown criterion"));
    let start = Instant::now();
    let result = match id {
        1 => linear_accuracy(),
        2 => overlap_equivalence(),
        3 => single_subdomain(),
        4 => schrodinger(),
        5 => square_wave(),
        6 => convergence_orders(),
        7 => decay_bound(),
        8 => krylov_fidelity(),
        9 => porous_medium(),
        10 => timing_ratio(),
        11 => dof_identity(),
        12 => rotation_2d(),
        _ => Err(anyhow::anyhow!("no criterion {id}")),
    };
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e:#}")));
    Outcome { id, title, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

pub fn run_all() -> Vec<Outcome> {
    CRITERIA.iter().map(|(id, _)| run_criterion(*id)).collect()
}

/// Largest over steps of `‖a_k - b_k‖∞ / ‖b_k‖∞`.
fn max_trajectory_gap<T: Scalar>(a: &RunReport<T>, b: &RunReport<T>) -> Result<f64> {
    ensure!(a.trajectory.len() == b.trajectory.len() && !a.trajectory.is_empty(), "trajectories differ in length");
    Ok(a.trajectory.iter().zip(&b.trajectory).map(|(x, y)| rel_gap(x, y)).fold(0.0, f64::max))
}

fn rel_gap<T: Scalar>(x: &[T], y: &[T]) -> f64 {
    let diff: Vec<T> = x.iter().zip(y).map(|(p, q)| *p - *q).collect();
    norm_inf(&diff) / norm_inf(y)
}

/// Least-squares slope of `log err` against `log dt`.
pub fn observed_order(dts: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target
}

// Advection-diffusion at C = 4, μ = 4.8.
const LINEAR_NU: f64 = 0.03;
const LINEAR_DT: f64 = 0.1;
const LINEAR_T: f64 = 3.0;

fn linear_accuracy() -> Check {
    let system = build_advdiff_1d(400, 10.0, 1.0, LINEAR_NU)?;
    let exact = exact_advdiff_fourier(&system, LINEAR_T)?;
    let start = Instant::now();
    let part = make_partition(system.mesh(), 8, 18, Layout::Blocks1D)?;
    let report = run_lem(&system, &part, &StepperConfig::new(Method::ExpEuler, LINEAR_DT, LINEAR_T))?;
    let seconds = start.elapsed().as_secs_f64();
    let err = error_norms(&report.final_state, &exact)?.l2_rel;
    let ok = (1e-3..=1e-2).contains(&err) && seconds <= 60.0;
    Ok((ok, format!("C = {:.2}, mu = {:.2}, D = 8, B = 18: l2 error {err:.3e} (want 1e-3..1e-2), run {seconds:.2}s (want <= 60s)", report.stability.courant, report.stability.mu)))
}

fn overlap_equivalence() -> Check {
    let system = build_advdiff_1d(400, 10.0, 1.0, LINEAR_NU)?;
    let exact = exact_advdiff_fourier(&system, LINEAR_T)?;
    let mut cfg = StepperConfig::new(Method::ExpEuler, LINEAR_DT, LINEAR_T);
    cfg.record_trajectory = true;
    let global = run_global(&system, &cfg)?;
    let wide = run_lem(&system, &make_partition(system.mesh(), 8, 18, Layout::Blocks1D)?, &cfg)?;
    let narrow = run_lem(&system, &make_partition(system.mesh(), 8, 5, Layout::Blocks1D)?, &cfg)?;
    let gap = max_trajectory_gap(&wide, &global)?;
    let err_wide = error_norms(&wide.final_state, &exact)?.l2_rel;
    let err_narrow = error_norms(&narrow.final_state, &exact)?.l2_rel;
    let ratio = err_narrow / err_wide;
    Ok((
        gap <= 1e-6 && ratio >= 10.0,
        format!("B = 18 trajectory gap {gap:.2e} (want <= 1e-6); B = 5 error {err_narrow:.3e} is {ratio:.1}x the B = 18 error (want >= 10x)"),
    ))
}

fn single_subdomain_gap<T: Scalar, S: SemiDiscreteSystem<T>>(system: &S, cfg: &StepperConfig) -> Result<f64> {
    let mut cfg = cfg.clone();
    cfg.record_trajectory = true;
    let global = run_global(system, &cfg)?;
    let part = make_partition(system.mesh(), 1, 0, Layout::Blocks1D)?;
    let local = run_lem(system, &part, &cfg)?;
    max_trajectory_gap(&local, &global)
}

fn single_subdomain() -> Check {
    let advdiff = build_advdiff_1d(400, 10.0, 1.0, 0.025)?;
    let schrodinger = build_schrodinger_1d(400, 10.0, 10.0)?;
    let fv = build_fv_advection_1d(400, 10.0, 1.0)?;
    let burgers = build_burgers_1d(400, 10.0, 0.05)?;
    let porous = build_porous_1d(400, 10.0, BarenblattParams::new(3.0, 1.0, 0.5)?)?;
    let gaps = [
        ("advdiff1d", single_subdomain_gap(&advdiff, &StepperConfig::new(Method::ExpEuler, 0.1, 1.0))?),
        ("schrodinger1d", single_subdomain_gap(&schrodinger, &StepperConfig::new(Method::ExpEuler, resolve_dt(&schrodinger, StepTarget::Mu(2.0))?, 0.025))?),
        ("fv_advection1d", single_subdomain_gap(&fv, &StepperConfig::new(Method::ExpRB2, 0.025, 0.25))?),
        ("burgers1d", single_subdomain_gap(&burgers, &StepperConfig::new(Method::ExpRB3, 0.05, 0.5))?),
        ("porous1d", single_subdomain_gap(&porous, &StepperConfig::new(Method::ExpRB2, 0.005, 0.05))?),
    ];
    let worst = gaps.iter().map(|(_, g)| *g).fold(0.0, f64::max);
    let list: Vec<String> = gaps.iter().map(|(name, g)| format!("{name} {g:.1e}")).collect();
    Ok((worst <= 1e-13, format!("max per-step gap over ten steps: {} (want <= 1e-13)", list.join(", "))))
}

fn schrodinger() -> Check {
    let system = build_schrodinger_1d(400, 10.0, 10.0)?;
    let u0 = system.initial_state();
    let reference = run_reference(&system.pseudospectral(), &u0, 1.0, 1e-9)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (mu, b) in [(2.0, 20), (4.0, 25)] {
        let cfg = StepperConfig::new(Method::ExpEuler, resolve_dt(&system, StepTarget::Mu(mu))?, 1.0);
        let global = run_global(&system, &cfg)?;
        let local = run_lem(&system, &make_partition(system.mesh(), 4, b, Layout::Blocks1D)?, &cfg)?;
        let e1 = error_norms(&global.final_state, &reference.state)?.l2_rel;
        let e4 = error_norms(&local.final_state, &reference.state)?.l2_rel;
        let drift = (norm2(&global.final_state) / norm2(&u0) - 1.0).abs();
        ok &= e1 <= 2e-3 && e4 <= 2e-3 && drift <= 1e-9;
        parts.push(format!("mu = {mu}, B = {b}: error D=1 {e1:.2e}, D=4 {e4:.2e}, norm drift {drift:.1e}"));
    }
    Ok((ok, format!("{} (want errors <= 2e-3, drift <= 1e-9)", parts.join("; "))))
}

fn square_wave() -> Check {
    let system = build_fv_advection_1d(400, 10.0, 1.0)?;
    let exact = system.exact(4.0);
    let dt = resolve_dt(&system, StepTarget::Courant(1.0))?;
    let rb2 = run_global(&system, &StepperConfig::new(Method::ExpRB2, dt, 4.0))?;
    let cn = run_global(&system, &StepperConfig::new(Method::CrankNicolson, dt, 4.0))?;
    let e = error_norms(&rb2.final_state, &exact)?;
    let e_cn = error_norms(&cn.final_state, &exact)?;
    let ok = within(e.linf_rel, 0.39, 0.3) && within(e.l2_rel, 0.12, 0.3) && e_cn.linf_rel >= 0.40;
    Ok((
        ok,
        format!(
            "exprb2 refresh 5: linf {:.3} (want 0.273..0.507), l2 {:.3} (want 0.084..0.156); cn linf {:.3} (want >= 0.40)",
            e.linf_rel, e.l2_rel, e_cn.linf_rel
        ),
    ))
}

fn convergence_orders() -> Check {
    let burgers = build_burgers_1d(400, 10.0, 0.05)?;
    let t_end = 1.0;
    let reference = run_reference(&burgers, &burgers.initial_state(), t_end, 1e-10)?;
    let dts = [0.05, 0.025, 0.0125];
    let mut orders = Vec::new();
    for method in [Method::ExpRB2, Method::ExpRB3] {
        let mut errs = Vec::new();
        for &dt in &dts {
            let mut cfg = StepperConfig::new(method, dt, t_end);
            cfg.jacobian_refresh_every = 1;
            cfg.phi_mode = PhiMode::KrylovAction;
            cfg.krylov = KrylovSettings { tol: 1e-13, m_max: 100 };
            errs.push(error_norms(&run_global(&burgers, &cfg)?.final_state, &reference.state)?.l2_rel);
        }
        orders.push(observed_order(&dts, &errs));
    }
    // Classical RK4 against the exact exponential of the linear operator.
    let advdiff = build_advdiff_1d(400, 10.0, 1.0, LINEAR_NU)?;
    let a = advdiff.linear_matrix().expect("linear model");
    let exact = expm_dense(&a.to_dense())?.matvec(&advdiff.initial_state());
    let rk_dts = [0.01, 0.005, 0.0025];
    let mut rk_errs = Vec::new();
    for &dt in &rk_dts {
        rk_errs.push(error_norms(&run_global(&advdiff, &StepperConfig::new(Method::Rk4, dt, 1.0))?.final_state, &exact)?.l2_rel);
    }
    let rk4 = observed_order(&rk_dts, &rk_errs);
    let ok = (orders[0] - 2.0).abs() <= 0.3 && (orders[1] - 3.0).abs() <= 0.3 && (rk4 - 4.0).abs() <= 0.3;
    Ok((ok, format!("exprb2 {:.2} (want 2.0 +- 0.3), exprb3 {:.2} (want 3.0 +- 0.3), rk4 {rk4:.2} (want 4.0 +- 0.3)", orders[0], orders[1])))
}

fn decay_bound() -> Check {
    let system = build_advection_dirichlet_1d(200, 10.0, 1.0, 0.0)?;
    let a = system.linear_matrix().expect("linear model");
    let thresholds = [1e-4, 1e-8, 1e-12];
    let mut violations = 0;
    let mut widths = Vec::new();
    for c in [0.5, 5.0, 20.0] {
        let dt = resolve_dt(&system, StepTarget::Courant(c))?;
        let report = verify_decay(a, dt, Topology::Banded)?;
        violations += report.violations;
        widths.push(thresholds.map(|t| report.width_at(t)));
    }
    let widening = (0..thresholds.len()).all(|k| widths[0][k] < widths[1][k] && widths[1][k] < widths[2][k]);
    let at_tightest: Vec<String> = widths.iter().map(|w| w[2].to_string()).collect();
    Ok((
        violations == 0 && widening,
        format!("{violations} bound violations (want 0); widths at 1e-12 for C = 0.5, 5, 20: {} (want increasing at 1e-4, 1e-8, 1e-12)", at_tightest.join(", ")),
    ))
}

fn krylov_fidelity() -> Check {
    let system = build_advdiff_2d(20, 20, 1.0, 1.0, 2.0 * std::f64::consts::PI, 1e-3)?;
    let a = system.linear_matrix().expect("linear model");
    let dt = resolve_dt(&system, StepTarget::Courant(4.0))?;
    let scaled = a.scaled(dt).to_dense();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for k in [1, 3] {
        let phi = phi_k_dense(&scaled, k)?;
        for _ in 0..50 {
            let v: Vec<f64> = (0..a.n_rows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dense = phi.matvec(&v);
            let krylov = phi_action_krylov(a, dt, &v, k, 1e-12, 120)?;
            let diff: Vec<f64> = krylov.value.iter().zip(&dense).map(|(p, q)| p - q).collect();
            worst = worst.max(norm2(&diff) / norm2(&dense));
        }
    }
    Ok((worst <= 1e-8, format!("400-unknown 2D operator at C = 4, k = 1 and 3, 50 vectors each: worst relative gap {worst:.2e} (want <= 1e-8)")))
}

fn porous_medium() -> Check {
    let params = BarenblattParams::new(3.0, 1.0, 0.5)?;
    let (dt, t_end) = (0.005, 1.0);
    let mut errs = Vec::new();
    let mut gap = f64::NAN;
    for (n, b) in [(100, 9), (200, 17), (400, 35)] {
        let system = build_porous_1d(n, 10.0, params)?;
        let mut cfg = StepperConfig::new(Method::ExpRB3, dt, t_end);
        cfg.record_trajectory = n == 400;
        let local = run_lem(&system, &make_partition(system.mesh(), 5, b, Layout::Blocks1D)?, &cfg)?;
        errs.push(error_norms(&local.final_state, &system.exact(t_end))?.l2_rel);
        if n == 400 {
            cfg.phi_mode = PhiMode::KrylovAction;
            cfg.krylov = KrylovSettings { tol: 1e-12, m_max: 100 };
            gap = max_trajectory_gap(&local, &run_global(&system, &cfg)?)?;
        }
    }
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let list: Vec<String> = errs.iter().map(|e| format!("{e:.2e}")).collect();
    Ok((
        monotone && gap <= 1e-6,
        format!("exprb3 D = 5, errors for n = 100, 200, 400: {} (want decreasing); n = 400 B = 35 trajectory gap {gap:.1e} (want <= 1e-6)", list.join(", ")),
    ))
}

/// The grid of the linear advection-diffusion timing table: (C = μ, B)
/// rows against D.
pub fn table1_case() -> BenchCase {
    let mut case = BenchCase::new(CaseKind::AdvDiff1d);
    case.subdomains = vec![1, 2, 4, 5, 10, 20];
    case.cells = [(1.0, 8), (2.0, 12), (4.0, 15), (8.0, 20)].map(|(c, buffer)| Cell { target: StepTarget::Courant(c), buffer }).to_vec();
    case
}

fn timing_ratio() -> Check {
    let system = build_advdiff_1d(400, 10.0, 1.0, 0.025)?;
    let cfg = StepperConfig::new(Method::ExpEuler, 0.1, 3.0);
    let part = make_partition(system.mesh(), 4, 15, Layout::Blocks1D)?;
    let mut global = f64::INFINITY;
    let mut local = f64::INFINITY;
    for _ in 0..3 {
        global = global.min(run_global(&system, &cfg)?.metrics.wall_seconds);
        local = local.min(run_lem(&system, &part, &cfg)?.metrics.wall_seconds);
    }
    let ratio = local / global;
    let rows = run_sweep(&table1_case(), 1, false)?;
    let skipped = !rows.iter().any(|r| r.subdomains == 20 && r.buffer == 20);
    let count = rows.len();
    Ok((
        ratio <= 0.5 && skipped && count == 23,
        format!(
            "C = mu = 4, B = 15: D = 4 takes {local:.4}s, D = 1 {global:.4}s, ratio {ratio:.3} (want <= 0.5); table sweep has {count} rows, (C = 8, B = 20, D = 20) {}",
            if skipped { "skipped" } else { "present" }
        ),
    ))
}

fn dof_identity() -> Check {
    let rows = run_sweep(&table1_case(), 1, false)?;
    let n = 400;
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| r.dof_updates_per_step != n + 2 * r.buffer * r.subdomains || r.failed())
        .map(|r| format!("D={} B={} dof={}", r.subdomains, r.buffer, r.dof_updates_per_step))
        .collect();
    Ok((bad.is_empty() && !rows.is_empty(), format!("{} sweep rows, mismatches: [{}] (want none)", rows.len(), bad.join(", "))))
}

fn rotation_2d() -> Check {
    let system = build_advdiff_2d(64, 64, 1.0, 1.0, 2.0 * std::f64::consts::PI, 1e-4)?;
    let dt = resolve_dt(&system, StepTarget::Courant(7.0))?;
    let t_end = (0.25 / dt).round() * dt;
    let reference = run_reference(&system, &system.initial_state(), t_end, 1e-12)?;
    let mut cfg = StepperConfig::new(Method::ExpRB2, dt, t_end);
    cfg.phi_mode = PhiMode::KrylovAction;
    cfg.krylov = KrylovSettings { tol: 1e-10, m_max: 80 };
    let global = run_global(&system, &cfg)?;
    let local = run_lem(&system, &make_partition(system.mesh(), 4, 14, Layout::Columns2D)?, &cfg)?;
    let rk4 = run_global(&system, &StepperConfig::new(Method::Rk4, dt / 14.0, t_end))?;
    let e_global = error_norms(&global.final_state, &reference.state)?.l2_rel;
    let e_local = error_norms(&local.final_state, &reference.state)?.l2_rel;
    let e_rk4 = error_norms(&rk4.final_state, &reference.state)?.l2_rel;
    let ok = e_global <= 2.0 * e_rk4 && e_local <= 2.0 * e_rk4 && global.warnings.is_empty() && local.warnings.is_empty();
    Ok((
        ok,
        format!(
            "C = {:.1}: exprb2 Krylov error {e_global:.2e}, LEM D = 4 B = 14 {e_local:.2e}; rk4 at C = {:.2} {e_rk4:.2e} (want <= 2x rk4)",
            global.stability.courant, rk4.stability.courant
        ),
    ))
}
