//! Matrix exponential and φ-functions.
//!
//! * [`expm_dense`]: diagonal [13/13] Padé approximant with scaling and
//!   squaring, scaled so that the 1-norm of the argument is at most 0.5.
//! * [`phi_k_dense`] / [`phi_dense_all`]: φ_k by Taylor series and
//!   φ-specific squaring, with no division by the (possibly singular)
//!   argument.
//! * [`phi_action_krylov`]: Arnoldi approximation of `φ_k(dt A) v` that never
//!   forms the matrix function.
//! * [`iserles_bound`] / [`verify_decay`]: off-diagonal decay bound for
//!   exponentials of banded matrices and a dense checker against it.
//!
//! Throughout, φ_0(z) = e^z and φ_k(z) = (φ_{k-1}(z) - 1/(k-1)!) / z.

use crate::dense::DenseMatrix;
use crate::error::{LemError, Result};
use crate::scalar::{axpy, dot, norm2, Scalar};
use crate::sparse::SparseMatrix;

/// Highest φ index supported by the dense and Krylov evaluators.
pub const MAX_PHI_ORDER: usize = 3;

/// Multiple of machine epsilon, relative to the largest entry, below which
/// computed exponential entries are treated as roundoff by [`verify_decay`].
pub const ROUNDOFF_ULPS: f64 = 64.0;

/// Largest order accepted by [`verify_decay`].
pub const DENSE_DECAY_GUARD: usize = 2000;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const SCALED_NORM_TARGET: f64 = 0.5;

/// Number of squarings [`expm_dense`] performs for an argument of 1-norm `norm`.
pub fn squaring_count(norm: f64) -> u32 {
    if norm <= SCALED_NORM_TARGET {
        0
    } else {
        (norm / SCALED_NORM_TARGET).log2().ceil().max(0.0) as u32
    }
}

/// `exp(A)` for a square dense matrix.
pub fn expm_dense<T: Scalar>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if !a.is_square() {
        return Err(LemError::DimensionMismatch { expected: a.rows(), got: a.cols() });
    }
    if !a.is_finite() {
        return Err(LemError::NonFinite("expm_dense argument".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }
    let s = squaring_count(a.norm_one());
    let a = a.scaled(T::from_real(0.5f64.powi(s as i32)));

    let b = |i: usize| T::from_real(PADE13[i]);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    let mut u_inner = a6.scaled(b(13));
    u_inner.add_scaled_mut(b(11), &a4);
    u_inner.add_scaled_mut(b(9), &a2);
    let mut u_outer = a6.matmul(&u_inner);
    u_outer.add_scaled_mut(b(7), &a6);
    u_outer.add_scaled_mut(b(5), &a4);
    u_outer.add_scaled_mut(b(3), &a2);
    u_outer.add_identity_mut(b(1));
    let u = a.matmul(&u_outer);

    let mut v_inner = a6.scaled(b(12));
    v_inner.add_scaled_mut(b(10), &a4);
    v_inner.add_scaled_mut(b(8), &a2);
    let mut v = a6.matmul(&v_inner);
    v.add_scaled_mut(b(6), &a6);
    v.add_scaled_mut(b(4), &a4);
    v.add_scaled_mut(b(2), &a2);
    v.add_identity_mut(b(0));

    let mut q = v.clone();
    q.add_scaled_mut(-T::one(), &u);
    let mut p = v;
    p.add_scaled_mut(T::one(), &u);
    let lu = q.lu()?;
    lu.solve_in_place(&mut p);

    let mut r = p;
    for _ in 0..s {
        r = r.matmul(&r);
        if r.max_abs() > 1e300 || !r.is_finite() {
            return Err(LemError::Overflow);
        }
    }
    if !r.is_finite() {
        return Err(LemError::Overflow);
    }
    Ok(r)
}

/// φ_1(A), ..., φ_k(A) by scaling and squaring on matrices of order `n`.
///
/// The argument is scaled to `X = A / 2^s` with 1-norm at most 0.5, φ_k(X)
/// is summed as a Taylor series and the lower orders follow from
/// `φ_j(X) = X φ_{j+1}(X) + I/j!`. Each of the `s` doublings then applies
/// `φ_j(2X) = 2^{-j} [φ_0(X) φ_j(X) + Σ_{i=1..j} φ_i(X) / (j-i)!]`.
pub fn phi_dense_all<T: Scalar>(a: &DenseMatrix<T>, k: usize) -> Result<Vec<DenseMatrix<T>>> {
    if k == 0 || k > MAX_PHI_ORDER {
        return Err(LemError::InvalidParameter(format!("phi order {k} outside 1..={MAX_PHI_ORDER}")));
    }
    if !a.is_square() {
        return Err(LemError::DimensionMismatch { expected: a.rows(), got: a.cols() });
    }
    if !a.is_finite() {
        return Err(LemError::NonFinite("phi argument".into()));
    }
    let n = a.rows();
    let inv_fact = |j: usize| T::from_real(1.0 / (1..=j).map(|i| i as f64).product::<f64>());
    let s = squaring_count(a.norm_one());
    let x = a.scaled(T::from_real(0.5f64.powi(s as i32)));

    // Truncation after degree p leaves a tail below ‖X‖^{p+1} / (p+1)!.
    let norm = x.norm_one();
    let (mut degree, mut tail) = (1usize, norm * norm / 2.0);
    while tail > 1e-18 && degree < 30 {
        degree += 1;
        tail *= norm / (degree + 1) as f64;
    }
    let mut top = DenseMatrix::identity(n).scaled(inv_fact(degree + k));
    for i in (0..degree).rev() {
        top = x.matmul(&top);
        top.add_identity_mut(inv_fact(i + k));
    }
    let mut phis = vec![top];
    for j in (0..k).rev() {
        let mut p = x.matmul(&phis[0]);
        p.add_identity_mut(inv_fact(j));
        phis.insert(0, p);
    }

    for _ in 0..s {
        let e = &phis[0];
        let mut next = vec![e.matmul(e)];
        for j in 1..=k {
            let mut p = e.matmul(&phis[j]);
            for i in 1..=j {
                p.add_scaled_mut(inv_fact(j - i), &phis[i]);
            }
            next.push(p.scaled(T::from_real(0.5f64.powi(j as i32))));
        }
        if next[0].max_abs() > 1e300 || !next[0].is_finite() {
            return Err(LemError::Overflow);
        }
        phis = next;
    }
    Ok(phis.split_off(1))
}

/// φ_k(A) for `0 <= k <= 3`.
pub fn phi_k_dense<T: Scalar>(a: &DenseMatrix<T>, k: usize) -> Result<DenseMatrix<T>> {
    match k {
        0 => expm_dense(a),
        k if k <= MAX_PHI_ORDER => Ok(phi_dense_all(a, k)?.pop().expect("k >= 1 blocks")),
        _ => Err(LemError::InvalidParameter(format!("phi order {k} exceeds {MAX_PHI_ORDER}"))),
    }
}

/// `φ_j(H) e_1` for `j = 0..=k` from one exponential of order `m + k`.
///
/// For `k >= 1` the augmented matrix is `[[H, e_1 e_1^T], [0, J]]` with `J`
/// the `k x k` upper shift; column `m + j - 1` of its exponential holds
/// `φ_j(H) e_1` in the first `m` rows.
fn phi_columns<T: Scalar>(h: &DenseMatrix<T>, k: usize) -> Result<Vec<Vec<T>>> {
    let m = h.rows();
    let mut aug = DenseMatrix::zeros(m + k, m + k);
    aug.set_block(0, 0, h);
    if k > 0 {
        aug[(0, m)] = T::one();
        for j in 0..k.saturating_sub(1) {
            aug[(m + j, m + j + 1)] = T::one();
        }
    }
    let e = expm_dense(&aug)?;
    let mut cols = vec![(0..m).map(|i| e[(i, 0)]).collect::<Vec<_>>()];
    for j in 1..=k {
        cols.push((0..m).map(|i| e[(i, m + j - 1)]).collect());
    }
    Ok(cols)
}

/// Outcome of a Krylov φ-action.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovResult<T> {
    pub value: Vec<T>,
    /// Dimension of the Krylov space used.
    pub dim: usize,
    pub converged: bool,
    /// Final relative error estimate.
    pub estimate: f64,
}

/// Arnoldi approximation of `φ_k(dt A) v`.
///
/// The basis grows until `β h_{m+1,m} |e_m^T φ_k(dt H_m) e_1|`, relative to
/// the norm of the iterate, drops below `tol`, or `m = m_max`; in the latter
/// case the last iterate is returned with `converged = false`.
pub fn phi_action_krylov<T: Scalar>(
    a: &SparseMatrix<T>,
    dt: f64,
    v: &[T],
    k: usize,
    tol: f64,
    m_max: usize,
) -> Result<KrylovResult<T>> {
    if k > MAX_PHI_ORDER {
        return Err(LemError::InvalidParameter(format!("phi order {k} exceeds {MAX_PHI_ORDER}")));
    }
    if a.n_rows() != a.n_cols() || v.len() != a.n_cols() {
        return Err(LemError::DimensionMismatch { expected: a.n_cols(), got: v.len() });
    }
    if m_max == 0 {
        return Err(LemError::InvalidParameter("m_max must be positive".into()));
    }
    let n = v.len();
    let beta = norm2(v);
    if beta == 0.0 {
        return Ok(KrylovResult { value: vec![T::zero(); n], dim: 0, converged: true, estimate: 0.0 });
    }
    let m_max = m_max.min(n);
    let scale = T::from_real(dt);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m_max + 1);
    basis.push(v.iter().map(|x| x.scale(1.0 / beta)).collect());
    let mut h = DenseMatrix::<T>::zeros(m_max + 1, m_max);
    let mut w = vec![T::zero(); n];

    for j in 0..m_max {
        a.matvec_into(&basis[j], &mut w);
        w.iter_mut().for_each(|x| *x *= scale);
        // modified Gram-Schmidt with one reorthogonalization pass
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = dot(q, &w);
                h[(i, j)] += c;
                axpy(-c, q, &mut w);
            }
        }
        let h_next = norm2(&w);
        let m = j + 1;
        let hm = h.block(0, 0, m, m);
        let cols = phi_columns(&hm, k)?;
        let y = &cols[k];
        let ynorm = norm2(y);
        let breakdown = h_next <= 1e-14 * hm.norm_one().max(f64::MIN_POSITIVE);
        let estimate = if breakdown { 0.0 } else { h_next * y[m - 1].modulus() / ynorm.max(f64::MIN_POSITIVE) };
        let converged = breakdown || estimate <= tol;
        if converged || m == m_max {
            let mut value = vec![T::zero(); n];
            for (q, &c) in basis.iter().zip(y.iter()) {
                axpy(c.scale(beta), q, &mut value);
            }
            if !converged {
                log::warn!("Krylov phi_{k} action not converged at m = {m}: estimate {estimate:.3e} > tol {tol:.1e}");
            }
            return Ok(KrylovResult { value, dim: m, converged, estimate });
        }
        h[(j + 1, j)] = T::from_real(h_next);
        basis.push(w.iter().map(|x| x.scale(1.0 / h_next)).collect());
    }
    unreachable!("loop returns at m = m_max")
}

/// Parameters of the off-diagonal decay bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayBound {
    /// Bound on the moduli of the matrix entries.
    pub rho: f64,
    /// Bandwidth.
    pub s: usize,
    /// Distance from the diagonal, `|i - j|`.
    pub d: usize,
}

/// `(ρ s / d)^{d/s} [ e^{d/s} - Σ_{k=0}^{d-1} (d/s)^k / k! ]`, bounding
/// `|exp(A)_{ij}|` for an `s`-banded `A` with entries bounded by `ρ`.
///
/// The bracket is the tail `Σ_{k>=d} x^k/k!` with `x = d/s`, summed directly
/// in log scale so neither cancellation nor overflow occurs.
pub fn iserles_bound(b: DecayBound) -> Result<f64> {
    if b.d == 0 {
        return Err(LemError::InvalidParameter("decay bound applies off the diagonal only (d >= 1)".into()));
    }
    if b.s == 0 {
        return Err(LemError::InvalidParameter("bandwidth s must be at least 1".into()));
    }
    if b.rho.is_nan() || b.rho < 0.0 || !b.rho.is_finite() {
        return Err(LemError::InvalidParameter(format!("entry bound rho = {} must be finite and >= 0", b.rho)));
    }
    if b.rho == 0.0 {
        return Ok(0.0);
    }
    let d = b.d as f64;
    let s = b.s as f64;
    let x = d / s;
    let ln_prefactor = x * (b.rho * s / d).ln();
    let ln_fact_d: f64 = (2..=b.d).map(|k| (k as f64).ln()).sum();
    // Σ_{i>=0} x^i d! / (d+i)!
    let mut term = 1.0;
    let mut series = 1.0;
    let mut i = 0usize;
    loop {
        i += 1;
        term *= x / (d + i as f64);
        series += term;
        if term < 1e-17 * series || i > 100_000 {
            break;
        }
    }
    let ln_tail = d * x.ln() - ln_fact_d + series.ln();
    Ok((ln_prefactor + ln_tail).exp())
}

/// How off-diagonal distance is measured in [`verify_decay`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Strictly banded operator; the bound is asserted.
    Banded,
    /// Periodic operator; distance is `min(|i-j|, n-|i-j|)` and the bound is
    /// only reported, since the operator is not banded in the strict sense.
    Cyclic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub distance: usize,
    pub max_entry: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub topology: Topology,
    pub rho: f64,
    pub bandwidth: usize,
    pub rows: Vec<DecayRow>,
    /// Entries at or below this level are roundoff in the computed
    /// exponential and are not counted as violations.
    pub roundoff_floor: f64,
    pub violations: usize,
}

impl DecayReport {
    /// Whether the bound holds; only meaningful (and only asserted by
    /// callers) for banded operators.
    pub fn bound_holds(&self) -> bool {
        self.violations == 0
    }

    /// Smallest distance beyond which every entry stays below `threshold`.
    pub fn width_at(&self, threshold: f64) -> usize {
        self.rows.iter().rev().find(|r| r.max_entry >= threshold).map_or(0, |r| r.distance)
    }

    /// Text table `distance max_entry bound`, one row per distance.
    pub fn to_table(&self) -> String {
        let mut out = String::from("distance,max_entry,bound\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.17e},{:.17e}\n", r.distance, r.max_entry, r.bound));
        }
        out
    }
}

/// Tabulates `max |exp(dt A)_{ij}|` per off-diagonal distance next to the
/// decay bound with `ρ = max |dt a_{ij}|` and `s` the bandwidth.
pub fn verify_decay<T: Scalar>(a: &SparseMatrix<T>, dt: f64, topology: Topology) -> Result<DecayReport> {
    let n = a.n_rows();
    if n != a.n_cols() {
        return Err(LemError::DimensionMismatch { expected: n, got: a.n_cols() });
    }
    if n > DENSE_DECAY_GUARD {
        return Err(LemError::TooLarge { n, limit: DENSE_DECAY_GUARD });
    }
    let scaled = a.scaled(T::from_real(dt));
    let rho = scaled.max_abs_entry();
    let dist = |i: usize, j: usize| {
        let d = i.abs_diff(j);
        match topology {
            Topology::Banded => d,
            Topology::Cyclic => d.min(n - d),
        }
    };
    let bandwidth = scaled.triplets().map(|(i, j, _)| dist(i, j)).max().unwrap_or(0);
    let e = expm_dense(&scaled.to_dense())?;
    let max_d = match topology {
        Topology::Banded => n.saturating_sub(1),
        Topology::Cyclic => n / 2,
    };
    let mut max_entry = vec![0.0f64; max_d + 1];
    for i in 0..n {
        for (j, v) in e.row(i).iter().enumerate() {
            let d = dist(i, j);
            max_entry[d] = max_entry[d].max(v.modulus());
        }
    }
    let roundoff_floor = ROUNDOFF_ULPS * f64::EPSILON * e.max_abs();
    let mut rows = Vec::with_capacity(max_d);
    let mut violations = 0;
    for (d, &m) in max_entry.iter().enumerate().skip(1) {
        let bound = if bandwidth == 0 { 0.0 } else { iserles_bound(DecayBound { rho, s: bandwidth, d })? };
        if m > bound.max(roundoff_floor) {
            violations += 1;
        }
        rows.push(DecayRow { distance: d, max_entry: m, bound });
    }
    Ok(DecayReport { topology, rho, bandwidth, rows, roundoff_floor, violations })
}

/// How φ-functions of a frozen operator are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhiMode {
    /// Dense φ matrices computed once and reused across steps.
    #[default]
    DenseStored,
    /// Arnoldi action on each vector; the matrix function is never formed.
    KrylovAction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovSettings {
    pub tol: f64,
    pub m_max: usize,
}

impl Default for KrylovSettings {
    fn default() -> Self {
        Self { tol: 1e-10, m_max: 60 }
    }
}

/// Result of one φ application.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiApplication<T> {
    pub value: Vec<T>,
    /// Krylov dimension, when the action was computed by Arnoldi.
    pub krylov_dim: Option<usize>,
    pub converged: bool,
}

/// φ_k(dt A) for one frozen operator `A` and step `dt`, behind one contract
/// regardless of evaluation mode.
#[derive(Debug, Clone)]
pub struct PhiEvaluator<T> {
    mode: PhiMode,
    order_max: usize,
    dt: f64,
    /// φ_1 .. φ_{order_max}, dense mode only.
    stored: Vec<DenseMatrix<T>>,
    operator: Option<SparseMatrix<T>>,
    krylov: KrylovSettings,
}

impl<T: Scalar> PhiEvaluator<T> {
    pub fn build(mode: PhiMode, a: &SparseMatrix<T>, dt: f64, order_max: usize, krylov: KrylovSettings) -> Result<Self> {
        if order_max == 0 || order_max > MAX_PHI_ORDER {
            return Err(LemError::InvalidParameter(format!("order_max {order_max} outside 1..={MAX_PHI_ORDER}")));
        }
        match mode {
            PhiMode::DenseStored => {
                let dense = a.scaled(T::from_real(dt)).to_dense();
                let stored = phi_dense_all(&dense, order_max)?;
                Ok(Self { mode, order_max, dt, stored, operator: None, krylov })
            }
            PhiMode::KrylovAction => Ok(Self { mode, order_max, dt, stored: Vec::new(), operator: Some(a.clone()), krylov }),
        }
    }

    pub fn mode(&self) -> PhiMode {
        self.mode
    }

    pub fn order_max(&self) -> usize {
        self.order_max
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `φ_k(dt A) v` for `1 <= k <= order_max`.
    pub fn apply(&self, k: usize, v: &[T]) -> Result<PhiApplication<T>> {
        if k == 0 || k > self.order_max {
            return Err(LemError::InvalidParameter(format!("phi_{k} requested but evaluator built for order <= {}", self.order_max)));
        }
        match self.mode {
            PhiMode::DenseStored => {
                let m = &self.stored[k - 1];
                if v.len() != m.cols() {
                    return Err(LemError::DimensionMismatch { expected: m.cols(), got: v.len() });
                }
                Ok(PhiApplication { value: m.matvec(v), krylov_dim: None, converged: true })
            }
            PhiMode::KrylovAction => {
                let a = self.operator.as_ref().expect("Krylov evaluator keeps its operator");
                let r = phi_action_krylov(a, self.dt, v, k, self.krylov.tol, self.krylov.m_max)?;
                Ok(PhiApplication { value: r.value, krylov_dim: Some(r.dim), converged: r.converged })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, FRAC_PI_2};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = expm_dense(&DenseMatrix::<f64>::zeros(4, 4)).unwrap();
        assert_eq!(e, DenseMatrix::identity(4));
    }

    #[test]
    fn exp_of_diagonal() {
        let e = expm_dense(&DenseMatrix::from_diagonal(&[1.0, -1.0])).unwrap();
        assert!((e[(0, 0)] - E).abs() < 1e-13 * E);
        assert!((e[(1, 1)] - 1.0 / E).abs() < 1e-13);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn exp_of_rotation_generator() {
        let t = FRAC_PI_2;
        let a = DenseMatrix::from_row_major(2, 2, vec![0.0, t, -t, 0.0]).unwrap();
        let e = expm_dense(&a).unwrap();
        let expected = [t.cos(), t.sin(), -t.sin(), t.cos()];
        for (v, x) in e.as_slice().iter().zip(expected) {
            assert!((v - x).abs() < 1e-12);
        }
    }

    #[test]
    fn exp_rejects_non_finite() {
        let a = DenseMatrix::from_row_major(1, 1, vec![f64::NAN]).unwrap();
        assert!(matches!(expm_dense(&a), Err(LemError::NonFinite(_))));
    }

    #[test]
    fn exp_overflow_reported() {
        let a = DenseMatrix::from_row_major(1, 1, vec![800.0]).unwrap();
        assert_eq!(expm_dense(&a), Err(LemError::Overflow));
    }

    #[test]
    fn phi_limits_at_zero() {
        let z = DenseMatrix::<f64>::zeros(3, 3);
        let p1 = phi_k_dense(&z, 1).unwrap();
        let p2 = phi_k_dense(&z, 2).unwrap();
        let p3 = phi_k_dense(&z, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { 1.0 } else { 0.0 };
                assert!((p1[(i, j)] - d).abs() < 1e-15);
                assert!((p2[(i, j)] - d / 2.0).abs() < 1e-15);
                assert!((p3[(i, j)] - d / 6.0).abs() < 1e-15);
            }
        }
    }

    /// φ_j(A) from the top block row of exp([[A, I, 0, ..], [0, 0, I, ..], ..]).
    fn phi_augmented(a: &DenseMatrix<f64>, k: usize) -> Vec<DenseMatrix<f64>> {
        let n = a.rows();
        let mut aug = DenseMatrix::zeros((k + 1) * n, (k + 1) * n);
        aug.set_block(0, 0, a);
        for blk in 0..k {
            for i in 0..n {
                aug[(blk * n + i, (blk + 1) * n + i)] = 1.0;
            }
        }
        let e = expm_dense(&aug).unwrap();
        (1..=k).map(|j| e.block(0, j * n, n, n)).collect()
    }

    #[test]
    fn phi_squaring_matches_augmented_exponential() {
        let n = 40;
        for scale in [0.1, 3.0, 40.0] {
            let a = DenseMatrix::from_fn(n, n, |i, j| match j as isize - i as isize {
                0 => -2.0 * scale,
                1 => 0.4 * scale,
                -1 => 1.6 * scale,
                _ => 0.0,
            });
            let fast = phi_dense_all(&a, 3).unwrap();
            let slow = phi_augmented(&a, 3);
            for (f, s) in fast.iter().zip(&slow) {
                let mut d = f.clone();
                d.add_scaled_mut(-1.0, s);
                assert!(d.max_abs() <= 1e-12 * s.max_abs(), "scale {scale}: {}", d.max_abs() / s.max_abs());
            }
        }
    }

    #[test]
    fn phi1_scalar() {
        let p = phi_k_dense(&DenseMatrix::from_diagonal(&[2.0]), 1).unwrap();
        // (e^2 - 1) / 2
        assert!(close(p[(0, 0)], 3.194528049465325, 1e-14));
    }

    #[test]
    fn phi_order_out_of_range() {
        let z = DenseMatrix::<f64>::zeros(2, 2);
        assert!(phi_k_dense(&z, 4).is_err());
        let ev = PhiEvaluator::build(PhiMode::DenseStored, &SparseMatrix::<f64>::identity(2), 1.0, 1, KrylovSettings::default()).unwrap();
        assert!(ev.apply(2, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn krylov_eigenvector_converges_immediately() {
        let a = SparseMatrix::from_diagonal(&[1.0, 1.0, 1.0]);
        let r = phi_action_krylov(&a, 1.0, &[1.0, 0.0, 0.0], 1, 1e-12, 10).unwrap();
        assert_eq!(r.dim, 1);
        assert!(r.converged);
        assert!(close(r.value[0], E - 1.0, 1e-14));
        assert_eq!(&r.value[1..], &[0.0, 0.0]);
    }

    #[test]
    fn krylov_zero_vector() {
        let a = SparseMatrix::<f64>::identity(4);
        let r = phi_action_krylov(&a, 1.0, &[0.0; 4], 1, 1e-10, 10).unwrap();
        assert_eq!(r.value, vec![0.0; 4]);
    }

    #[test]
    fn iserles_examples() {
        let b = iserles_bound(DecayBound { rho: 1.0, s: 1, d: 1 }).unwrap();
        assert!(close(b, E - 1.0, 1e-14));
        assert_eq!(iserles_bound(DecayBound { rho: 0.0, s: 1, d: 7 }).unwrap(), 0.0);
        assert!(iserles_bound(DecayBound { rho: 1.0, s: 1, d: 0 }).is_err());
    }

    #[test]
    fn iserles_matches_direct_sum() {
        // direct evaluation where it is numerically safe
        for &(rho, s, d) in &[(0.25, 1usize, 10usize), (2.0, 2, 5), (0.5, 3, 9), (10.0, 1, 30)] {
            let x = d as f64 / s as f64;
            let mut term = 1.0;
            for k in 1..d {
                term *= x / k as f64;
            }
            // tail summed forward to avoid cancellation against e^x
            let mut tail = 0.0;
            let mut t = term * x / d as f64;
            for k in d..d + 400 {
                tail += t;
                t *= x / (k + 1) as f64;
            }
            let direct = (rho * s as f64 / d as f64).powf(x) * tail;
            let got = iserles_bound(DecayBound { rho, s, d }).unwrap();
            assert!(close(got, direct, 1e-12), "{rho} {s} {d}: {got} vs {direct}");
        }
        // ρ = 0.25, s = 1, d = 10 evaluates to about 1.14e-12
        let v = iserles_bound(DecayBound { rho: 0.25, s: 1, d: 10 }).unwrap();
        assert!(v > 1.1e-12 && v < 1.2e-12, "{v}");
    }

    #[test]
    fn decay_of_zero_matrix() {
        let r = verify_decay(&SparseMatrix::<f64>::zeros(6, 6), 1.0, Topology::Banded).unwrap();
        assert!(r.rows.iter().all(|row| row.max_entry == 0.0));
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn decay_guard() {
        let a = SparseMatrix::<f64>::identity(DENSE_DECAY_GUARD + 1);
        assert!(matches!(verify_decay(&a, 1.0, Topology::Banded), Err(LemError::TooLarge { .. })));
    }
}
