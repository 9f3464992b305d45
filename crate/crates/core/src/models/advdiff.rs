use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{check_diffusivity, gaussian, linear_rhs, Axis, Boundary, Mesh, Rhs, SemiDiscreteSystem, WaveSpeeds};
use crate::error::{LemError, Result};
use crate::sparse::SparseMatrix;

/// Constant-coefficient advection-diffusion `c_t + u c_x = ν c_xx`,
/// centered differences.
#[derive(Debug, Clone)]
pub struct AdvDiff1d {
    mesh: Mesh,
    velocity: f64,
    nu: f64,
    matrix: SparseMatrix<f64>,
    initial: Vec<f64>,
}

/// Periodic mesh on `[0, L)` with a Gaussian centered at `L/2`, width `L/20`.
pub fn build_advdiff_1d(n: usize, length: f64, velocity: f64, nu: f64) -> Result<AdvDiff1d> {
    check_diffusivity(nu)?;
    let axis = Axis::new(0.0, length, n, Boundary::Periodic)?;
    AdvDiff1d::new(axis, velocity, nu)
}

/// Same operator with homogeneous Dirichlet data, used to contrast banded
/// and cyclic decay of the matrix exponential.
pub fn build_advection_dirichlet_1d(n: usize, length: f64, velocity: f64, nu: f64) -> Result<AdvDiff1d> {
    check_diffusivity(nu)?;
    let axis = Axis::new(0.0, length, n, Boundary::Dirichlet)?;
    AdvDiff1d::new(axis, velocity, nu)
}

impl AdvDiff1d {
    fn new(axis: Axis, velocity: f64, nu: f64) -> Result<Self> {
        let dx = axis.dx();
        let lower = velocity / (2.0 * dx) + nu / (dx * dx);
        let upper = -velocity / (2.0 * dx) + nu / (dx * dx);
        let diag = -2.0 * nu / (dx * dx);
        let mut triplets = Vec::with_capacity(3 * axis.n);
        for j in 0..axis.n {
            triplets.push((j, j, diag));
            if let Some(l) = axis.neighbor(j, -1) {
                triplets.push((j, l, lower));
            }
            if let Some(r) = axis.neighbor(j, 1) {
                triplets.push((j, r, upper));
            }
        }
        let matrix = SparseMatrix::from_triplets_summed(axis.n, axis.n, triplets)?;
        let center = axis.center();
        let sigma = axis.extent / 20.0;
        let initial = axis.coords().iter().map(|&x| gaussian(&[x], &[center], sigma)).collect();
        Ok(Self { mesh: Mesh::line(axis), velocity, nu, matrix, initial })
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn with_initial(mut self, initial: Vec<f64>) -> Result<Self> {
        if initial.len() != self.mesh.len() {
            return Err(LemError::DimensionMismatch { expected: self.mesh.len(), got: initial.len() });
        }
        self.initial = initial;
        Ok(self)
    }
}

impl Rhs<f64> for AdvDiff1d {
    fn dim(&self) -> usize {
        self.mesh.len()
    }

    fn rhs_into(&self, u: &[f64], _t: f64, out: &mut [f64]) {
        linear_rhs(&self.matrix, u, out);
    }
}

impl SemiDiscreteSystem<f64> for AdvDiff1d {
    fn name(&self) -> &'static str {
        "advdiff1d"
    }

    fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    fn jacobian(&self, _u: &[f64]) -> SparseMatrix<f64> {
        self.matrix.clone()
    }

    fn linear_matrix(&self) -> Option<&SparseMatrix<f64>> {
        Some(&self.matrix)
    }

    fn initial_state(&self) -> Vec<f64> {
        self.initial.clone()
    }

    fn wave_speeds(&self, _u: &[f64]) -> WaveSpeeds {
        WaveSpeeds { advective: vec![self.velocity.abs()], diffusive: self.nu }
    }
}

/// Exact periodic solution of the continuous problem at time `t`, from the
/// discrete Fourier series of the system's initial datum.
pub fn exact_advdiff_fourier(system: &AdvDiff1d, t: f64) -> Result<Vec<f64>> {
    let axis = system.mesh.axis(0);
    if axis.boundary != Boundary::Periodic {
        return Err(LemError::Unsupported("Fourier solution needs a periodic mesh".into()));
    }
    let n = axis.n;
    let mut modes: Vec<Complex64> = system.initial.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut modes);
    for (k, c) in modes.iter_mut().enumerate() {
        // Signed wavenumber; the Nyquist mode of an even mesh only decays.
        let nyquist = 2 * k == n;
        let signed = if 2 * k <= n { k as f64 } else { k as f64 - n as f64 };
        let wave = 2.0 * std::f64::consts::PI * signed / axis.extent;
        let advect = if nyquist { 0.0 } else { -wave * system.velocity * t };
        let factor = Complex64::from_polar((-system.nu * wave * wave * t).exp(), advect);
        *c *= factor;
    }
    planner.plan_fft_inverse(n).process(&mut modes);
    let scale = 1.0 / n as f64;
    Ok(modes.iter().map(|c| c.re * scale).collect())
}

/// Solid-body rotation `c_t + ∇·(a c) = ν Δc`, `a = ω (-(y - y_c), x - x_c)`,
/// with homogeneous Dirichlet data.
#[derive(Debug, Clone)]
pub struct AdvDiff2d {
    mesh: Mesh,
    omega: f64,
    nu: f64,
    matrix: SparseMatrix<f64>,
    initial: Vec<f64>,
}

/// Gaussian of width `Lx/16` placed a quarter of the domain width to the
/// right of the rotation center.
pub fn build_advdiff_2d(nx: usize, ny: usize, lx: f64, ly: f64, omega: f64, nu: f64) -> Result<AdvDiff2d> {
    check_diffusivity(nu)?;
    let ax = Axis::new(0.0, lx, nx, Boundary::Dirichlet)?;
    let ay = Axis::new(0.0, ly, ny, Boundary::Dirichlet)?;
    let mesh = Mesh::plane(ax, ay);
    let (xc, yc) = (ax.center(), ay.center());
    let (dx, dy) = (ax.dx(), ay.dx());
    let mut triplets = Vec::with_capacity(5 * mesh.len());
    for ix in 0..nx {
        for iy in 0..ny {
            let row = mesh.index2(ix, iy);
            let ax_vel = -omega * (ay.coord(iy) - yc);
            let ay_vel = omega * (ax.coord(ix) - xc);
            triplets.push((row, row, -2.0 * nu / (dx * dx) - 2.0 * nu / (dy * dy)));
            // ∂x(a_x c) with a_x independent of x, likewise for y.
            if let Some(l) = ax.neighbor(ix, -1) {
                triplets.push((row, mesh.index2(l, iy), ax_vel / (2.0 * dx) + nu / (dx * dx)));
            }
            if let Some(r) = ax.neighbor(ix, 1) {
                triplets.push((row, mesh.index2(r, iy), -ax_vel / (2.0 * dx) + nu / (dx * dx)));
            }
            if let Some(d) = ay.neighbor(iy, -1) {
                triplets.push((row, mesh.index2(ix, d), ay_vel / (2.0 * dy) + nu / (dy * dy)));
            }
            if let Some(u) = ay.neighbor(iy, 1) {
                triplets.push((row, mesh.index2(ix, u), -ay_vel / (2.0 * dy) + nu / (dy * dy)));
            }
        }
    }
    let matrix = SparseMatrix::from_triplets_summed(mesh.len(), mesh.len(), triplets)?;
    let center = [xc + 0.25 * lx, yc];
    let sigma = lx / 16.0;
    let initial = (0..mesh.len()).map(|i| gaussian(&mesh.point(i), &center, sigma)).collect();
    Ok(AdvDiff2d { mesh, omega, nu, matrix, initial })
}

impl AdvDiff2d {
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

impl Rhs<f64> for AdvDiff2d {
    fn dim(&self) -> usize {
        self.mesh.len()
    }

    fn rhs_into(&self, u: &[f64], _t: f64, out: &mut [f64]) {
        linear_rhs(&self.matrix, u, out);
    }
}

impl SemiDiscreteSystem<f64> for AdvDiff2d {
    fn name(&self) -> &'static str {
        "advdiff2d"
    }

    fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    fn jacobian(&self, _u: &[f64]) -> SparseMatrix<f64> {
        self.matrix.clone()
    }

    fn linear_matrix(&self) -> Option<&SparseMatrix<f64>> {
        Some(&self.matrix)
    }

    fn initial_state(&self) -> Vec<f64> {
        self.initial.clone()
    }

    fn wave_speeds(&self, _u: &[f64]) -> WaveSpeeds {
        // |a_x| peaks at the top/bottom nodes, |a_y| at the left/right ones.
        let (ax, ay) = (self.mesh.axis(0), self.mesh.axis(1));
        let half_y = (ay.coord(0) - ay.center()).abs();
        let half_x = (ax.coord(0) - ax.center()).abs();
        WaveSpeeds { advective: vec![self.omega.abs() * half_y, self.omega.abs() * half_x], diffusive: self.nu }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::stability_params;
    use crate::scalar::norm_inf;

    #[test]
    fn constants_are_steady() {
        let sys = build_advdiff_1d(64, 10.0, 1.0, 0.05).unwrap();
        let r = sys.rhs(&vec![1.0; 64], 0.0);
        assert!(norm_inf(&r) < 1e-12);
        assert!(sys.matrix.row_sums().iter().all(|s| s.abs() < 1e-12));
    }

    #[test]
    fn scaled_matrix_entries_match_stencil() {
        // u = 1, L = 10, n = 400: dx = 0.025; dt = 0.1 gives C = 4 and
        // ν = 0.03 gives μ = 4.8. Largest |dt A| entry is the diagonal 2μ.
        let sys = build_advdiff_1d(400, 10.0, 1.0, 0.03).unwrap();
        let p = stability_params(&sys, &sys.initial_state(), 0.1);
        assert!((p.courant - 4.0).abs() < 1e-12);
        assert!((p.mu - 4.8).abs() < 1e-12);
        let scaled = sys.matrix.scaled(0.1);
        assert!((scaled.max_abs_entry() - 9.6).abs() < 1e-12);
        assert!((scaled.get(10, 9) - (2.0 + 4.8)).abs() < 1e-12);
        assert!((scaled.get(10, 11) - (-2.0 + 4.8)).abs() < 1e-12);
        assert!((scaled.get(0, 399) - (2.0 + 4.8)).abs() < 1e-12);
    }

    #[test]
    fn stability_params_examples() {
        let sys = build_advdiff_1d(400, 10.0, 1.0, 0.05).unwrap();
        let u = sys.initial_state();
        let p = stability_params(&sys, &u, 0.0);
        assert_eq!((p.courant, p.mu), (0.0, 0.0));
        let dt = 2.0 * 0.025f64.powi(2) / 0.05;
        assert!((dt - 0.025).abs() < 1e-15);
        assert!((stability_params(&sys, &u, dt).mu - 2.0).abs() < 1e-12);
    }

    #[test]
    fn negative_diffusivity_rejected() {
        assert!(build_advdiff_1d(64, 1.0, 1.0, -0.1).is_err());
        assert!(build_advdiff_1d(3, 1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn fourier_solution_examples() {
        let sys = build_advdiff_1d(128, 10.0, 1.0, 0.0).unwrap();
        let u0 = sys.initial_state();
        let at0 = exact_advdiff_fourier(&sys, 0.0).unwrap();
        assert!(u0.iter().zip(&at0).all(|(a, b)| (a - b).abs() < 1e-13));
        let full = exact_advdiff_fourier(&sys, 10.0).unwrap();
        assert!(u0.iter().zip(&full).all(|(a, b)| (a - b).abs() < 1e-12));
        // Shift by exactly 8 cells.
        let shifted = exact_advdiff_fourier(&sys, 8.0 * 10.0 / 128.0).unwrap();
        for j in 0..128 {
            assert!((shifted[(j + 8) % 128] - u0[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn fourier_heat_mode_decays() {
        let n = 64;
        let l = 2.0;
        let sys = build_advdiff_1d(n, l, 0.0, 0.1).unwrap();
        let mode: Vec<f64> = sys.mesh.axis(0).coords().iter().map(|x| (2.0 * std::f64::consts::PI * 3.0 * x / l).cos()).collect();
        let sys = sys.with_initial(mode.clone()).unwrap();
        let t = 0.3;
        let k = 2.0 * std::f64::consts::PI * 3.0 / l;
        let out = exact_advdiff_fourier(&sys, t).unwrap();
        let decay = (-0.1 * k * k * t).exp();
        assert!(mode.iter().zip(&out).all(|(a, b)| (a * decay - b).abs() < 1e-13));
    }

    #[test]
    fn rotation_advects_constants_to_zero_in_interior() {
        let sys = build_advdiff_2d(20, 20, 1.0, 1.0, 2.0 * std::f64::consts::PI, 0.0).unwrap();
        let r = sys.rhs(&vec![1.0; 400], 0.0);
        for ix in 1..19 {
            for iy in 1..19 {
                assert!(r[sys.mesh.index2(ix, iy)].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rotation_columns_are_contiguous() {
        let sys = build_advdiff_2d(8, 6, 1.0, 1.0, 1.0, 0.01).unwrap();
        assert_eq!(sys.mesh.index2(2, 0), 12);
        assert_eq!(sys.mesh.point(13), vec![sys.mesh.axis(0).coord(2), sys.mesh.axis(1).coord(1)]);
    }
}
