//! Monotonized second-order finite volumes: minmod-limited linear
//! reconstruction with an upwind or Rusanov numerical flux, applied line by
//! line on structured meshes.

use super::{check_diffusivity, gaussian, Axis, Boundary, Mesh, Rhs, SemiDiscreteSystem, WaveSpeeds};
use crate::error::{LemError, Result};
use crate::sparse::SparseMatrix;

/// Minmod limiter: the argument of smaller modulus when both have the same
/// sign, zero otherwise.
pub fn minmod(a: f64, b: f64) -> f64 {
    minmod_branch(a, b).0
}

/// Minmod value with its partial derivatives. On ties the first argument's
/// branch is active.
fn minmod_branch(a: f64, b: f64) -> (f64, f64, f64) {
    if a * b <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if a.abs() <= b.abs() {
        (a, 1.0, 0.0)
    } else {
        (b, 0.0, 1.0)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Flux {
    /// Linear flux `a u`, upwinded on the sign of `a`.
    Linear(f64),
    /// Burgers flux `u²/2` with the local Lax-Friedrichs correction.
    Rusanov,
}

impl Flux {
    /// Numerical flux and its derivatives with respect to the left and right
    /// reconstructed states.
    fn eval(self, left: f64, right: f64) -> (f64, f64, f64) {
        match self {
            Flux::Linear(a) if a >= 0.0 => (a * left, a, 0.0),
            Flux::Linear(a) => (a * right, 0.0, a),
            Flux::Rusanov => {
                let (alpha, d_alpha_left, d_alpha_right) =
                    if left.abs() >= right.abs() { (left.abs(), sign(left), 0.0) } else { (right.abs(), 0.0, sign(right)) };
                let jump = right - left;
                let value = 0.25 * (left * left + right * right) - 0.5 * alpha * jump;
                let d_left = 0.5 * left + 0.5 * alpha - 0.5 * jump * d_alpha_left;
                let d_right = 0.5 * right - 0.5 * alpha - 0.5 * jump * d_alpha_right;
                (value, d_left, d_right)
            }
        }
    }
}

/// One mesh line: unknown `j` along the line has global index
/// `offset + j * stride`.
#[derive(Debug, Clone, Copy)]
struct Line<'a> {
    axis: &'a Axis,
    offset: usize,
    stride: usize,
}

impl Line<'_> {
    fn global(&self, j: usize, shift: isize) -> Option<usize> {
        self.axis.neighbor(j, shift).map(|k| self.offset + k * self.stride)
    }

    /// Index of the cell left of each face. Periodic lines have `n` faces,
    /// Dirichlet lines `n + 1` including both walls.
    fn faces(&self) -> impl Iterator<Item = isize> {
        let n = self.axis.n as isize;
        match self.axis.boundary {
            Boundary::Periodic => 0..n,
            Boundary::Dirichlet => -1..n,
        }
    }

    /// Global indices of cells `left - 1 ..= left + 2`; ghosts are `None`.
    fn stencil(&self, left: isize) -> [Option<usize>; 4] {
        let n = self.axis.n as isize;
        let mut out = [None; 4];
        for (c, slot) in out.iter_mut().enumerate() {
            let k = left - 1 + c as isize;
            *slot = match self.axis.boundary {
                Boundary::Periodic => Some(self.offset + k.rem_euclid(n) as usize * self.stride),
                Boundary::Dirichlet => (0..n).contains(&k).then(|| self.offset + k as usize * self.stride),
            };
        }
        out
    }

    fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.axis.n).map(move |j| self.offset + j * self.stride)
    }
}

/// Flux through the face between stencil cells 1 and 2, with its gradient
/// with respect to the four stencil cells.
fn face_flux(flux: Flux, u: &[f64], cells: &[Option<usize>; 4]) -> (f64, [f64; 4]) {
    let v = cells.map(|c| c.map_or(0.0, |i| u[i]));
    // Limited slope of stencil cell `c` (1 or 2); ghosts carry zero slope.
    let slope = |c: usize| -> (f64, f64, f64) {
        if cells[c].is_none() {
            return (0.0, 0.0, 0.0);
        }
        minmod_branch(v[c] - v[c - 1], v[c + 1] - v[c])
    };
    let (s1, da1, db1) = slope(1);
    let (s2, da2, db2) = slope(2);
    let left = v[1] + 0.5 * s1;
    let right = v[2] - 0.5 * s2;
    let d_left = if cells[1].is_some() { [-0.5 * da1, 1.0 + 0.5 * (da1 - db1), 0.5 * db1, 0.0] } else { [0.0; 4] };
    let d_right = if cells[2].is_some() { [0.0, 0.5 * da2, 1.0 - 0.5 * (da2 - db2), -0.5 * db2] } else { [0.0; 4] };
    let (value, f_left, f_right) = flux.eval(left, right);
    let mut grad = [0.0; 4];
    for c in 0..4 {
        grad[c] = f_left * d_left[c] + f_right * d_right[c];
    }
    (value, grad)
}

fn flux_divergence(line: Line<'_>, flux: Flux, u: &[f64], out: &mut [f64]) {
    let inv_dx = 1.0 / line.axis.dx();
    for left in line.faces() {
        let cells = line.stencil(left);
        let (f, _) = face_flux(flux, u, &cells);
        if let Some(i) = cells[1] {
            out[i] -= f * inv_dx;
        }
        if let Some(i) = cells[2] {
            out[i] += f * inv_dx;
        }
    }
}

fn flux_divergence_jacobian(line: Line<'_>, flux: Flux, u: &[f64], triplets: &mut Vec<(usize, usize, f64)>) {
    let inv_dx = 1.0 / line.axis.dx();
    for left in line.faces() {
        let cells = line.stencil(left);
        let (_, grad) = face_flux(flux, u, &cells);
        for (col, g) in cells.iter().zip(grad) {
            let Some(col) = *col else { continue };
            if g == 0.0 {
                continue;
            }
            if let Some(i) = cells[1] {
                triplets.push((i, col, -g * inv_dx));
            }
            if let Some(i) = cells[2] {
                triplets.push((i, col, g * inv_dx));
            }
        }
    }
}

fn diffusion(line: Line<'_>, nu: f64, u: &[f64], out: &mut [f64]) {
    if nu == 0.0 {
        return;
    }
    let w = nu / line.axis.dx().powi(2);
    for (j, i) in line.cells().enumerate() {
        let l = line.global(j, -1).map_or(0.0, |k| u[k]);
        let r = line.global(j, 1).map_or(0.0, |k| u[k]);
        out[i] += w * (l - 2.0 * u[i] + r);
    }
}

fn diffusion_jacobian(line: Line<'_>, nu: f64, triplets: &mut Vec<(usize, usize, f64)>) {
    if nu == 0.0 {
        return;
    }
    let w = nu / line.axis.dx().powi(2);
    for (j, i) in line.cells().enumerate() {
        triplets.push((i, i, -2.0 * w));
        for shift in [-1, 1] {
            if let Some(k) = line.global(j, shift) {
                triplets.push((i, k, w));
            }
        }
    }
}

/// Every mesh line of a 1D or 2D mesh, tagged with its axis.
fn lines(mesh: &Mesh) -> Vec<(usize, Line<'_>)> {
    match mesh.dim() {
        1 => vec![(0, Line { axis: mesh.axis(0), offset: 0, stride: 1 })],
        _ => {
            let (nx, ny) = (mesh.axis(0).n, mesh.axis(1).n);
            let along_x = (0..ny).map(|iy| (0, Line { axis: mesh.axis(0), offset: iy, stride: ny }));
            let along_y = (0..nx).map(|ix| (1, Line { axis: mesh.axis(1), offset: ix * ny, stride: 1 }));
            along_x.chain(along_y).collect()
        }
    }
}

fn max_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Indicator of `[start, end)` on a periodic axis, as cell averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareWave {
    pub start: f64,
    pub end: f64,
}

impl SquareWave {
    /// Cell averages of the wave translated by `shift`.
    pub fn cell_averages(&self, axis: &Axis, shift: f64) -> Vec<f64> {
        let period = axis.extent;
        let dx = axis.dx();
        let s = (self.start + shift - axis.origin).rem_euclid(period) + axis.origin;
        let width = self.end - self.start;
        (0..axis.n)
            .map(|j| {
                let (a, b) = (axis.coord(j) - 0.5 * dx, axis.coord(j) + 0.5 * dx);
                let covered: f64 = (-1..=1)
                    .map(|k| {
                        let lo = s + k as f64 * period;
                        (b.min(lo + width) - a.max(lo)).max(0.0)
                    })
                    .sum();
                covered / dx
            })
            .collect()
    }
}

/// Linear advection `c_t + a c_x = 0`, periodic, limited finite volumes.
#[derive(Debug, Clone)]
pub struct FvAdvection1d {
    mesh: Mesh,
    velocity: f64,
    wave: SquareWave,
}

/// Square wave occupying the middle half of `[0, L)`.
pub fn build_fv_advection_1d(n: usize, length: f64, velocity: f64) -> Result<FvAdvection1d> {
    if !velocity.is_finite() {
        return Err(LemError::InvalidParameter("advection speed must be finite".into()));
    }
    let axis = Axis::new(0.0, length, n, Boundary::Periodic)?;
    Ok(FvAdvection1d { mesh: Mesh::line(axis), velocity, wave: SquareWave { start: 0.25 * length, end: 0.75 * length } })
}

impl FvAdvection1d {
    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    pub fn square_wave(&self) -> SquareWave {
        self.wave
    }

    /// Exact translation of the initial cell averages.
    pub fn exact(&self, t: f64) -> Vec<f64> {
        self.wave.cell_averages(self.mesh.axis(0), self.velocity * t)
    }

    fn line(&self) -> Line<'_> {
        Line { axis: self.mesh.axis(0), offset: 0, stride: 1 }
    }
}

impl Rhs<f64> for FvAdvection1d {
    fn dim(&self) -> usize {
        self.mesh.len()
    }

    fn rhs_into(&self, u: &[f64], _t: f64, out: &mut [f64]) {
        out.fill(0.0);
        flux_divergence(self.line(), Flux::Linear(self.velocity), u, out);
    }
}

impl SemiDiscreteSystem<f64> for FvAdvection1d {
    fn name(&self) -> &'static str {
        "fvadv1d"
    }

    fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    fn jacobian(&self, u: &[f64]) -> SparseMatrix<f64> {
        let mut triplets = Vec::with_capacity(8 * u.len());
        flux_divergence_jacobian(self.line(), Flux::Linear(self.velocity), u, &mut triplets);
        SparseMatrix::from_triplets_summed(u.len(), u.len(), triplets).expect("stencil indices are in range")
    }

    fn initial_state(&self) -> Vec<f64> {
        self.exact(0.0)
    }

    fn wave_speeds(&self, _u: &[f64]) -> WaveSpeeds {
        WaveSpeeds { advective: vec![self.velocity.abs()], diffusive: 0.0 }
    }
}

/// Viscous Burgers `u_t + (u²/2)_x = ν u_xx`, periodic.
#[derive(Debug, Clone)]
pub struct Burgers1d {
    mesh: Mesh,
    nu: f64,
}

/// Gaussian datum of width `L/20` centered at `L/2`.
pub fn build_burgers_1d(n: usize, length: f64, nu: f64) -> Result<Burgers1d> {
    check_diffusivity(nu)?;
    let axis = Axis::new(0.0, length, n, Boundary::Periodic)?;
    Ok(Burgers1d { mesh: Mesh::line(axis), nu })
}

impl Burgers1d {
    pub fn nu(&self) -> f64 {
        self.nu
    }

    fn line(&self) -> Line<'_> {
        Line { axis: self.mesh.axis(0), offset: 0, stride: 1 }
    }
}

impl Rhs<f64> for Burgers1d {
    fn dim(&self) -> usize {
        self.mesh.len()
    }

    fn rhs_into(&self, u: &[f64], _t: f64, out: &mut [f64]) {
        out.fill(0.0);
        flux_divergence(self.line(), Flux::Rusanov, u, out);
        diffusion(self.line(), self.nu, u, out);
    }
}

impl SemiDiscreteSystem<f64> for Burgers1d {
    fn name(&self) -> &'static str {
        "burgers1d"
    }

    fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    fn jacobian(&self, u: &[f64]) -> SparseMatrix<f64> {
        let mut triplets = Vec::with_capacity(11 * u.len());
        flux_divergence_jacobian(self.line(), Flux::Rusanov, u, &mut triplets);
        diffusion_jacobian(self.line(), self.nu, &mut triplets);
        SparseMatrix::from_triplets_summed(u.len(), u.len(), triplets).expect("stencil indices are in range")
    }

    fn initial_state(&self) -> Vec<f64> {
        let axis = self.mesh.axis(0);
        let sigma = axis.extent / 20.0;
        axis.coords().iter().map(|&x| gaussian(&[x], &[axis.center()], sigma)).collect()
    }

    fn wave_speeds(&self, u: &[f64]) -> WaveSpeeds {
        WaveSpeeds { advective: vec![max_abs(u)], diffusive: self.nu }
    }
}

/// Burgers flux `u²/2` in both directions with viscosity, on a Dirichlet
/// mesh whose vertical spacing is `dx / anisotropy`.
#[derive(Debug, Clone)]
pub struct Burgers2d {
    mesh: Mesh,
    nu: f64,
}

/// The vertical extent follows from `lx`, `nx`, `ny` and the anisotropy.
/// The datum is a Gaussian at the domain center with widths a tenth of each
/// extent.
pub fn build_burgers_2d(nx: usize, ny: usize, lx: f64, nu: f64, anisotropy: f64) -> Result<Burgers2d> {
    check_diffusivity(nu)?;
    if !(anisotropy >= 1.0) || !anisotropy.is_finite() {
        return Err(LemError::InvalidParameter(format!("anisotropy must be >= 1, got {anisotropy}")));
    }
    let ax = Axis::new(0.0, lx, nx, Boundary::Dirichlet)?;
    let dy = ax.dx() / anisotropy;
    let ay = Axis::new(0.0, dy * (ny + 1) as f64, ny, Boundary::Dirichlet)?;
    Ok(Burgers2d { mesh: Mesh::plane(ax, ay), nu })
}

impl Burgers2d {
    pub fn nu(&self) -> f64 {
        self.nu
    }
}

impl Rhs<f64> for Burgers2d {
    fn dim(&self) -> usize {
        self.mesh.len()
    }

    fn rhs_into(&self, u: &[f64], _t: f64, out: &mut [f64]) {
        out.fill(0.0);
        for (_, line) in lines(&self.mesh) {
            flux_divergence(line, Flux::Rusanov, u, out);
            diffusion(line, self.nu, u, out);
        }
    }
}

impl SemiDiscreteSystem<f64> for Burgers2d {
    fn name(&self) -> &'static str {
        "burgers2d"
    }

    fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    fn jacobian(&self, u: &[f64]) -> SparseMatrix<f64> {
        let mut triplets = Vec::with_capacity(21 * u.len());
        for (_, line) in lines(&self.mesh) {
            flux_divergence_jacobian(line, Flux::Rusanov, u, &mut triplets);
            diffusion_jacobian(line, self.nu, &mut triplets);
        }
        SparseMatrix::from_triplets_summed(u.len(), u.len(), triplets).expect("stencil indices are in range")
    }

    fn initial_state(&self) -> Vec<f64> {
        let (ax, ay) = (self.mesh.axis(0), self.mesh.axis(1));
        (0..self.mesh.len())
            .map(|i| {
                let p = self.mesh.point(i);
                let scaled = [(p[0] - ax.center()) / ax.extent, (p[1] - ay.center()) / ay.extent];
                gaussian(&scaled, &[0.0, 0.0], 0.1)
            })
            .collect()
    }

    fn wave_speeds(&self, u: &[f64]) -> WaveSpeeds {
        let speed = max_abs(u);
        WaveSpeeds { advective: vec![speed, speed], diffusive: self.nu }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::stability_params;
    use crate::models::testing::jacobian_fd_discrepancy;
    use crate::scalar::norm_inf;
    use rand::Rng;

    #[test]
    fn minmod_branches() {
        assert_eq!(minmod(1.0, 2.0), 1.0);
        assert_eq!(minmod(-3.0, -2.0), -2.0);
        assert_eq!(minmod(1.0, -1.0), 0.0);
        assert_eq!(minmod(0.0, 5.0), 0.0);
        assert_eq!(minmod_branch(2.0, 2.0), (2.0, 1.0, 0.0));
    }

    #[test]
    fn constants_are_steady() {
        let adv = build_fv_advection_1d(50, 10.0, 1.0).unwrap();
        assert!(norm_inf(&adv.rhs(&vec![0.7; 50], 0.0)) < 1e-13);
        let b = build_burgers_1d(50, 10.0, 0.05).unwrap();
        assert!(norm_inf(&b.rhs(&vec![0.7; 50], 0.0)) < 1e-13);
        let b2 = build_burgers_2d(12, 10, 1.0, 0.01, 10.0).unwrap();
        // Away from the walls only.
        let r = b2.rhs(&vec![0.3; 120], 0.0);
        let mesh = b2.mesh();
        for ix in 2..10 {
            for iy in 2..8 {
                assert!(r[mesh.index2(ix, iy)].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn burgers_jacobian_vanishes_at_rest_without_viscosity() {
        let b = build_burgers_1d(40, 10.0, 0.0).unwrap();
        assert_eq!(b.jacobian(&vec![0.0; 40]).nnz(), 0);
    }

    #[test]
    fn smooth_monotone_data_gives_second_order_upwind() {
        let adv = build_fv_advection_1d(40, 10.0, 1.0).unwrap();
        let dx = 0.25;
        // Convex increasing data: minmod picks the backward slope, so the
        // scheme is the second-order upwind (3u_i - 4u_{i-1} + u_{i-2})/2dx.
        let u: Vec<f64> = (0..40).map(|j| (j as f64 * dx).powi(2)).collect();
        let r = adv.rhs(&u, 0.0);
        for j in 3..38 {
            let expected = -(3.0 * u[j] - 4.0 * u[j - 1] + u[j - 2]) / (2.0 * dx);
            assert!((r[j] - expected).abs() < 1e-10, "{j}");
        }
    }

    #[test]
    fn periodic_fluxes_telescope() {
        let mut rng = rand::thread_rng();
        let b = build_burgers_1d(64, 10.0, 0.05).unwrap();
        let adv = build_fv_advection_1d(64, 10.0, 1.0).unwrap();
        for _ in 0..5 {
            let u: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let scale = norm_inf(&u);
            assert!(b.rhs(&u, 0.0).iter().sum::<f64>().abs() < 1e-12 * scale * 64.0);
            assert!(adv.rhs(&u, 0.0).iter().sum::<f64>().abs() < 1e-12 * scale * 64.0);
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let adv = build_fv_advection_1d(60, 10.0, 1.0).unwrap();
        assert!(jacobian_fd_discrepancy(&adv, 20, 1, |r, _| r.gen_range(-1.0..1.0)) < 1e-5);
        let left = build_fv_advection_1d(60, 10.0, -0.5).unwrap();
        assert!(jacobian_fd_discrepancy(&left, 20, 2, |r, _| r.gen_range(-1.0..1.0)) < 1e-5);
        let b = build_burgers_1d(60, 10.0, 0.05).unwrap();
        assert!(jacobian_fd_discrepancy(&b, 20, 3, |r, _| r.gen_range(-1.0..1.0)) < 1e-5);
        let b2 = build_burgers_2d(10, 8, 1.0, 0.01, 4.0).unwrap();
        assert!(jacobian_fd_discrepancy(&b2, 20, 4, |r, _| r.gen_range(-1.0..1.0)) < 1e-5);
    }

    #[test]
    fn square_wave_averages() {
        let adv = build_fv_advection_1d(400, 10.0, 1.0).unwrap();
        let u0 = adv.initial_state();
        let mass: f64 = u0.iter().sum::<f64>() * 0.025;
        assert!((mass - 5.0).abs() < 1e-12);
        // Translation by a whole number of cells permutes the averages.
        let moved = adv.exact(4.0);
        for j in 0..400 {
            assert!((moved[(j + 160) % 400] - u0[j]).abs() < 1e-12);
        }
        let wrapped = adv.exact(10.0);
        assert!(u0.iter().zip(&wrapped).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn forward_euler_creates_no_new_extrema() {
        let adv = build_fv_advection_1d(200, 10.0, 1.0).unwrap();
        let dx = 0.05;
        let dt = 0.5 * dx;
        let mut u = adv.initial_state();
        for _ in 0..400 {
            let k = adv.rhs(&u, 0.0);
            u.iter_mut().zip(&k).for_each(|(a, b)| *a += dt * b);
        }
        assert!(u.iter().all(|&v| v > -1e-12 && v < 1.0 + 1e-12));
    }

    #[test]
    fn anisotropic_courant_numbers() {
        let b2 = build_burgers_2d(20, 10, 1.0, 0.0, 10.0).unwrap();
        let p = stability_params(&b2, &vec![0.5; 200], 0.01);
        assert!((p.courant_axes[1] - 10.0 * p.courant_axes[0]).abs() < 1e-12);
        assert_eq!(p.courant, p.courant_axes[1]);
    }
}
