//! Explicit Runge-Kutta steps and the adaptive Dormand-Prince reference.

use log::warn;

use crate::error::{LemError, Result};
use crate::models::Rhs;
use crate::scalar::{norm2, Scalar};

/// `u + Σ c_i k_i`, with real weights.
fn combine<T: Scalar>(u: &[T], terms: &[(f64, &[T])]) -> Vec<T> {
    let mut out = u.to_vec();
    for &(c, k) in terms {
        if c == 0.0 {
            continue;
        }
        let c = T::from_real(c);
        out.iter_mut().zip(k).for_each(|(o, x)| *o += c * *x);
    }
    out
}

/// Heun's method.
pub fn step_rk2<T: Scalar, R: Rhs<T> + ?Sized>(system: &R, u: &[T], t: f64, dt: f64) -> Vec<T> {
    let k1 = system.rhs(u, t);
    let k2 = system.rhs(&combine(u, &[(dt, &k1)]), t + dt);
    combine(u, &[(0.5 * dt, &k1), (0.5 * dt, &k2)])
}

/// Three-stage strong-stability-preserving Runge-Kutta.
pub fn step_rk3<T: Scalar, R: Rhs<T> + ?Sized>(system: &R, u: &[T], t: f64, dt: f64) -> Vec<T> {
    let k1 = system.rhs(u, t);
    let u1 = combine(u, &[(dt, &k1)]);
    let k2 = system.rhs(&u1, t + dt);
    let u2 = combine(u, &[(0.25 * dt, &k1), (0.25 * dt, &k2)]);
    let k3 = system.rhs(&u2, t + 0.5 * dt);
    combine(u, &[(dt / 6.0, &k1), (dt / 6.0, &k2), (2.0 * dt / 3.0, &k3)])
}

/// Classical fourth-order Runge-Kutta.
pub fn step_rk4<T: Scalar, R: Rhs<T> + ?Sized>(system: &R, u: &[T], t: f64, dt: f64) -> Vec<T> {
    let h = 0.5 * dt;
    let k1 = system.rhs(u, t);
    let k2 = system.rhs(&combine(u, &[(h, &k1)]), t + h);
    let k3 = system.rhs(&combine(u, &[(h, &k2)]), t + h);
    let k4 = system.rhs(&combine(u, &[(dt, &k3)]), t + dt);
    combine(u, &[(dt / 6.0, &k1), (dt / 3.0, &k2), (dt / 3.0, &k3), (dt / 6.0, &k4)])
}

const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
/// Fifth-order weights; also the last stage's abscissa row (FSAL).
const B5: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
/// Difference between fifth- and fourth-order weights, seven stages.
const E: [f64; 7] = [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

const SAFETY: f64 = 0.9;
const PI_BETA: f64 = 0.04;
const MAX_STEPS: usize = 20_000_000;

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution<T> {
    pub state: Vec<T>,
    pub accepted: usize,
    pub rejected: usize,
    /// Relative 2-norm gap to a rerun at a tenth of the tolerance.
    pub self_check: Option<f64>,
    pub tol: f64,
}

impl<T> ReferenceSolution<T> {
    /// Whether the tolerance-reduction rerun agreed to within `10 tol`.
    pub fn consistent(&self) -> bool {
        self.self_check.is_none_or(|gap| gap <= 10.0 * self.tol)
    }
}

fn scaled_rms<T: Scalar>(err: &[T], y0: &[T], y1: &[T], tol: f64) -> f64 {
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = tol + tol * a.modulus().max(b.modulus());
            (e.modulus() / sc).powi(2)
        })
        .sum();
    (sum / err.len().max(1) as f64).sqrt()
}

fn initial_step<T: Scalar, R: Rhs<T> + ?Sized>(system: &R, u: &[T], f: &[T], t: f64, tol: f64) -> f64 {
    let zeros = vec![T::zero(); u.len()];
    let d0 = scaled_rms(u, u, u, tol);
    let d1 = scaled_rms(f, u, u, tol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let u1 = combine(u, &[(h0, f)]);
    let f1 = system.rhs(&u1, t + h0);
    let df = combine(&f1, &[(-1.0, f)]);
    let d2 = scaled_rms(&df, u, &zeros, tol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1)
}

/// Dormand-Prince 5(4) with PI step-size control, mixed absolute/relative
/// tolerance `tol`.
pub fn integrate_dp45<T: Scalar, R: Rhs<T> + ?Sized>(system: &R, u0: &[T], t0: f64, t_end: f64, tol: f64) -> Result<ReferenceSolution<T>> {
    if !(tol > 0.0) {
        return Err(LemError::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    if u0.len() != system.dim() {
        return Err(LemError::DimensionMismatch { expected: system.dim(), got: u0.len() });
    }
    let mut u = u0.to_vec();
    let mut t = t0;
    let mut accepted = 0;
    let mut rejected = 0;
    if t_end <= t0 {
        return Ok(ReferenceSolution { state: u, accepted, rejected, self_check: None, tol });
    }
    let mut k1 = system.rhs(&u, t);
    let mut h = initial_step(system, &u, &k1, t, tol).min(t_end - t0);
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;
    while t < t_end {
        if accepted + rejected > MAX_STEPS {
            return Err(LemError::Unsupported(format!("reference solver exceeded {MAX_STEPS} steps at t = {t}")));
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(LemError::StepSizeUnderflow { t, h });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let k2 = system.rhs(&combine(&u, &[(h * A2[0], &k1)]), t + C[0] * h);
        let k3 = system.rhs(&combine(&u, &[(h * A3[0], &k1), (h * A3[1], &k2)]), t + C[1] * h);
        let k4 = system.rhs(&combine(&u, &[(h * A4[0], &k1), (h * A4[1], &k2), (h * A4[2], &k3)]), t + C[2] * h);
        let k5 = system.rhs(&combine(&u, &[(h * A5[0], &k1), (h * A5[1], &k2), (h * A5[2], &k3), (h * A5[3], &k4)]), t + C[3] * h);
        let k6 = system.rhs(
            &combine(&u, &[(h * A6[0], &k1), (h * A6[1], &k2), (h * A6[2], &k3), (h * A6[3], &k4), (h * A6[4], &k5)]),
            t + C[4] * h,
        );
        let next = combine(&u, &[(h * B5[0], &k1), (h * B5[2], &k3), (h * B5[3], &k4), (h * B5[4], &k5), (h * B5[5], &k6)]);
        let k7 = system.rhs(&next, t + h);
        let zeros = vec![T::zero(); u.len()];
        let err_vec = combine(
            &zeros,
            &[(h * E[0], &k1), (h * E[2], &k3), (h * E[3], &k4), (h * E[4], &k5), (h * E[5], &k6), (h * E[6], &k7)],
        );
        let err = scaled_rms(&err_vec, &u, &next, tol);
        if !err.is_finite() {
            rejected += 1;
            h *= 0.1;
            last_rejected = true;
            continue;
        }
        let fac11 = err.powf(0.2 - 0.75 * PI_BETA);
        if err <= 1.0 {
            let fac = (fac11 / err_old.powf(PI_BETA) / SAFETY).clamp(0.1, 5.0);
            err_old = err.max(1e-4);
            u = next;
            k1 = k7;
            t = if last { t_end } else { t + h };
            accepted += 1;
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            h = h_new;
            last_rejected = false;
        } else {
            rejected += 1;
            h /= (fac11 / SAFETY).min(5.0);
            last_rejected = true;
        }
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(LemError::NonFinite("reference solution".into()));
    }
    Ok(ReferenceSolution { state: u, accepted, rejected, self_check: None, tol })
}

/// Adaptive reference integration from `t = 0`, checked against a rerun at
/// `tol / 10`.
pub fn run_reference<T: Scalar, R: Rhs<T> + ?Sized>(system: &R, u0: &[T], t_end: f64, tol: f64) -> Result<ReferenceSolution<T>> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(LemError::InvalidParameter(format!("reference tolerance must lie in (0, 1e-6], got {tol}")));
    }
    let mut coarse = integrate_dp45(system, u0, 0.0, t_end, tol)?;
    let fine = integrate_dp45(system, u0, 0.0, t_end, tol / 10.0)?;
    let diff: Vec<T> = coarse.state.iter().zip(&fine.state).map(|(a, b)| *a - *b).collect();
    let scale = norm2(&fine.state);
    let gap = if scale > 0.0 { norm2(&diff) / scale } else { norm2(&diff) };
    coarse.self_check = Some(gap);
    if !coarse.consistent() {
        warn!("reference solution at tol {tol:e} differs by {gap:e} from the tol/10 rerun");
    }
    Ok(coarse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    struct Decay(f64);

    impl Rhs<f64> for Decay {
        fn dim(&self) -> usize {
            1
        }

        fn rhs_into(&self, u: &[f64], _t: f64, out: &mut [f64]) {
            out[0] = self.0 * u[0];
        }
    }

    struct Rotation;

    impl Rhs<Complex64> for Rotation {
        fn dim(&self) -> usize {
            1
        }

        fn rhs_into(&self, u: &[Complex64], _t: f64, out: &mut [Complex64]) {
            out[0] = Complex64::new(0.0, 1.0) * u[0];
        }
    }

    fn order(step: fn(&Decay, &[f64], f64, f64) -> Vec<f64>) -> f64 {
        let sys = Decay(-1.0);
        let err = |n: usize| {
            let dt = 1.0 / n as f64;
            let mut u = vec![1.0];
            for i in 0..n {
                u = step(&sys, &u, i as f64 * dt, dt);
            }
            (u[0] - (-1.0f64).exp()).abs()
        };
        (err(20) / err(40)).log2()
    }

    #[test]
    fn runge_kutta_orders_on_scalar_decay() {
        assert!((order(step_rk2) - 2.0).abs() < 0.1);
        assert!((order(step_rk3) - 3.0).abs() < 0.1);
        assert!((order(step_rk4) - 4.0).abs() < 0.1);
    }

    #[test]
    fn reference_matches_scalar_decay() {
        let sol = integrate_dp45(&Decay(-2.0), &[1.0], 0.0, 1.5, 1e-10).unwrap();
        assert!((sol.state[0] - (-3.0f64).exp()).abs() < 1e-9);
        assert!(sol.accepted > 0);
    }

    #[test]
    fn reference_self_check() {
        let sol = run_reference(&Decay(-1.0), &[1.0], 2.0, 1e-9).unwrap();
        assert!(sol.consistent());
        assert!(sol.self_check.unwrap() < 1e-8);
        assert!(run_reference(&Decay(-1.0), &[1.0], 2.0, 1e-3).is_err());
    }

    #[test]
    fn reference_handles_complex_rotation() {
        let sol = integrate_dp45(&Rotation, &[Complex64::new(1.0, 0.0)], 0.0, 3.0, 1e-10).unwrap();
        assert!((sol.state[0] - Complex64::from_polar(1.0, 3.0)).norm() < 1e-8);
    }

    #[test]
    fn blowup_reports_underflow_or_nonfinite() {
        struct Blowup;
        impl Rhs<f64> for Blowup {
            fn dim(&self) -> usize {
                1
            }
            fn rhs_into(&self, u: &[f64], _t: f64, out: &mut [f64]) {
                out[0] = u[0] * u[0];
            }
        }
        // Solution 1/(1 - t) blows up at t = 1.
        assert!(integrate_dp45(&Blowup, &[1.0], 0.0, 2.0, 1e-8).is_err());
    }
}
