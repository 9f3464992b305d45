use super::{Axis, Boundary, Mesh, Rhs, SemiDiscreteSystem, WaveSpeeds};
use crate::error::{LemError, Result};
use crate::sparse::SparseMatrix;

/// Parameters of the Barenblatt self-similar solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarenblattParams {
    pub m: f64,
    pub amp: f64,
    pub t0: f64,
}

impl BarenblattParams {
    pub fn new(m: f64, amp: f64, t0: f64) -> Result<Self> {
        if !(m > 1.0) || !(t0 > 0.0) || amp == 0.0 || !amp.is_finite() || !m.is_finite() || !t0.is_finite() {
            return Err(LemError::InvalidParameter(format!("Barenblatt parameters need m > 1, t0 > 0, A != 0; got m={m}, A={amp}, t0={t0}")));
        }
        Ok(Self { m, amp, t0 })
    }

    /// Similarity exponent `1/(m+1)`.
    pub fn k(&self) -> f64 {
        1.0 / (self.m + 1.0)
    }

    pub fn exact(&self, x: f64, t: f64) -> f64 {
        let (m, k) = (self.m, self.k());
        let tau = t + self.t0;
        let front = self.front(t);
        if x * x >= front * front {
            return 0.0;
        }
        let inner = self.amp * self.amp - k * (m - 1.0) * x * x / (2.0 * m * tau.powf(2.0 * k));
        tau.powf(-k) * inner.max(0.0).powf(1.0 / (m - 1.0))
    }

    /// Half-width of the support at time `t`.
    pub fn front(&self, t: f64) -> f64 {
        let (m, k) = (self.m, self.k());
        (2.0 * m * (t + self.t0).powf(2.0 * k) * self.amp * self.amp / (k * (m - 1.0))).sqrt()
    }
}

/// `c_t = (c^m)_xx` on `[-L/2, L/2]` with homogeneous Dirichlet data and
/// centered differences. Powers are signed, `|c|^(m-1) c`, so transient
/// undershoots stay well defined.
#[derive(Debug, Clone)]
pub struct Porous1d {
    mesh: Mesh,
    params: BarenblattParams,
}

/// Initial data are the Barenblatt profile at `t = 0`.
pub fn build_porous_1d(n: usize, length: f64, params: BarenblattParams) -> Result<Porous1d> {
    let params = BarenblattParams::new(params.m, params.amp, params.t0)?;
    let axis = Axis::new(-0.5 * length, length, n, Boundary::Dirichlet)?;
    Ok(Porous1d { mesh: Mesh::line(axis), params })
}

impl Porous1d {
    pub fn params(&self) -> BarenblattParams {
        self.params
    }

    pub fn exact(&self, t: f64) -> Vec<f64> {
        self.mesh.axis(0).coords().iter().map(|&x| self.params.exact(x, t)).collect()
    }

    fn power(&self, c: f64) -> f64 {
        c.abs().powf(self.params.m - 1.0) * c
    }

    fn power_derivative(&self, c: f64) -> f64 {
        self.params.m * c.abs().powf(self.params.m - 1.0)
    }
}

impl Rhs<f64> for Porous1d {
    fn dim(&self) -> usize {
        self.mesh.len()
    }

    fn rhs_into(&self, u: &[f64], _t: f64, out: &mut [f64]) {
        let n = u.len();
        let inv = 1.0 / self.mesh.dx(0).powi(2);
        let w: Vec<f64> = u.iter().map(|&c| self.power(c)).collect();
        for i in 0..n {
            let l = if i > 0 { w[i - 1] } else { 0.0 };
            let r = if i + 1 < n { w[i + 1] } else { 0.0 };
            out[i] = (l - 2.0 * w[i] + r) * inv;
        }
    }
}

impl SemiDiscreteSystem<f64> for Porous1d {
    fn name(&self) -> &'static str {
        "porous1d"
    }

    fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    fn jacobian(&self, u: &[f64]) -> SparseMatrix<f64> {
        let n = u.len();
        let inv = 1.0 / self.mesh.dx(0).powi(2);
        let mut triplets = Vec::with_capacity(3 * n);
        for (j, &c) in u.iter().enumerate() {
            let d = self.power_derivative(c) * inv;
            triplets.push((j, j, -2.0 * d));
            if j > 0 {
                triplets.push((j - 1, j, d));
            }
            if j + 1 < n {
                triplets.push((j + 1, j, d));
            }
        }
        SparseMatrix::from_triplets_summed(n, n, triplets).expect("tridiagonal indices are in range")
    }

    fn initial_state(&self) -> Vec<f64> {
        self.exact(0.0)
    }

    /// The effective diffusivity is `m |c|^(m-1)`.
    fn wave_speeds(&self, u: &[f64]) -> WaveSpeeds {
        let diffusive = u.iter().map(|&c| self.power_derivative(c)).fold(0.0, f64::max);
        WaveSpeeds { advective: vec![0.0], diffusive }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testing::jacobian_fd_discrepancy;
    use rand::Rng;

    fn standard() -> BarenblattParams {
        BarenblattParams::new(3.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(BarenblattParams::new(1.0, 1.0, 1.0).is_err());
        assert!(BarenblattParams::new(3.0, 0.0, 1.0).is_err());
        assert!(BarenblattParams::new(3.0, 1.0, 0.0).is_err());
        assert_eq!(standard().k(), 0.25);
    }

    #[test]
    fn exact_profile_examples() {
        let p = standard();
        assert!((p.exact(0.0, 0.0) - 1.0).abs() < 1e-15);
        let front = p.front(0.0);
        assert!((front * front - 12.0).abs() < 1e-12);
        assert_eq!(p.exact(front, 0.0), 0.0);
        assert_eq!(p.exact(front * 1.01, 0.0), 0.0);
        assert!(p.exact(front * 0.99, 0.0) > 0.0);
    }

    #[test]
    fn zero_state_is_steady() {
        let sys = build_porous_1d(40, 10.0, standard()).unwrap();
        assert!(sys.rhs(&vec![0.0; 40], 0.0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let sys = build_porous_1d(60, 10.0, standard()).unwrap();
        assert!(jacobian_fd_discrepancy(&sys, 20, 9, |r, _| r.gen_range(-1.0..1.5)) < 1e-5);
    }

    /// Max discrete residual `∂t c - D2(c^m)` of the exact profile inside
    /// 80% of the support.
    fn residual(n: usize) -> f64 {
        let p = standard();
        let sys = build_porous_1d(n, 10.0, p).unwrap();
        let t = 0.5;
        let h = 1e-5;
        let now = sys.exact(t);
        let rate: Vec<f64> = sys.exact(t + h).iter().zip(sys.exact(t - h)).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let r = sys.rhs(&now, t);
        let front = p.front(t);
        sys.mesh.axis(0).coords().iter().enumerate().filter(|(_, x)| x.abs() < 0.8 * front).map(|(j, _)| (rate[j] - r[j]).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn exact_profile_residual_is_second_order() {
        // n + 1 intervals per refinement so the node sets nest.
        let coarse = residual(99);
        let fine = residual(199);
        let ratio = coarse / fine;
        assert!(ratio > 4.0 * 0.7 && ratio < 4.0 * 1.3, "ratio {ratio}");
    }
}
