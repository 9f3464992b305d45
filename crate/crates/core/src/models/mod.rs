//! Semi-discrete benchmark problems `du/dt = F(u, t)`.
//!
//! Every model exposes its right-hand side, an analytic Jacobian, initial
//! data and the wave speeds that define its Courant number and diffusive
//! stability parameter. Linear models additionally expose their matrix.

mod advdiff;
mod fv;
mod porous;
mod schrodinger;

pub use advdiff::{build_advdiff_1d, build_advdiff_2d, build_advection_dirichlet_1d, exact_advdiff_fourier, AdvDiff1d, AdvDiff2d};
pub use fv::{build_burgers_1d, build_burgers_2d, build_fv_advection_1d, minmod, Burgers1d, Burgers2d, FvAdvection1d, SquareWave};
pub use porous::{build_porous_1d, BarenblattParams, Porous1d};
pub use schrodinger::{build_schrodinger_1d, Schrodinger1d, SchrodingerPseudospectral};

use crate::error::{LemError, Result};
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// Homogeneous Dirichlet data folded into the operator; only interior
    /// nodes are unknowns.
    Dirichlet,
}

/// One mesh direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub origin: f64,
    pub extent: f64,
    pub n: usize,
    pub boundary: Boundary,
}

impl Axis {
    pub fn new(origin: f64, extent: f64, n: usize, boundary: Boundary) -> Result<Self> {
        if n < 4 {
            return Err(LemError::InvalidParameter(format!("need at least 4 nodes per axis, got {n}")));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(LemError::InvalidParameter(format!("axis extent must be positive, got {extent}")));
        }
        Ok(Self { origin, extent, n, boundary })
    }

    pub fn dx(&self) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.extent / self.n as f64,
            Boundary::Dirichlet => self.extent / (self.n + 1) as f64,
        }
    }

    /// Coordinate of node `j`.
    pub fn coord(&self, j: usize) -> f64 {
        match self.boundary {
            Boundary::Periodic => self.origin + j as f64 * self.dx(),
            Boundary::Dirichlet => self.origin + (j + 1) as f64 * self.dx(),
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    pub fn center(&self) -> f64 {
        self.origin + 0.5 * self.extent
    }

    /// Neighbor `j + offset`, wrapped on periodic axes and `None` outside a
    /// Dirichlet axis.
    pub fn neighbor(&self, j: usize, offset: isize) -> Option<usize> {
        let k = j as isize + offset;
        let n = self.n as isize;
        match self.boundary {
            Boundary::Periodic => Some(k.rem_euclid(n) as usize),
            Boundary::Dirichlet => (0..n).contains(&k).then_some(k as usize),
        }
    }
}

/// Structured mesh in one or two dimensions. In 2D the unknown at
/// `(ix, iy)` has index `ix * ny + iy`, so every mesh column is a
/// contiguous index range.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    axes: Vec<Axis>,
}

impl Mesh {
    pub fn line(axis: Axis) -> Self {
        Self { axes: vec![axis] }
    }

    pub fn plane(x: Axis, y: Axis) -> Self {
        Self { axes: vec![x, y] }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self, k: usize) -> f64 {
        self.axes[k].dx()
    }

    pub fn min_dx(&self) -> f64 {
        self.axes.iter().map(Axis::dx).fold(f64::INFINITY, f64::min)
    }

    pub fn index2(&self, ix: usize, iy: usize) -> usize {
        ix * self.axes[1].n + iy
    }

    /// Physical coordinates of unknown `idx`.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        match self.axes.len() {
            1 => vec![self.axes[0].coord(idx)],
            _ => {
                let ny = self.axes[1].n;
                vec![self.axes[0].coord(idx / ny), self.axes[1].coord(idx % ny)]
            }
        }
    }
}

/// Right-hand side of an ODE system; all that explicit solvers need.
pub trait Rhs<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn rhs_into(&self, u: &[T], t: f64, out: &mut [T]);

    fn rhs(&self, u: &[T], t: f64) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        self.rhs_into(u, t, &mut out);
        out
    }
}

/// Maximum wave speeds of a state, per axis, and the maximum effective
/// diffusivity.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSpeeds {
    pub advective: Vec<f64>,
    pub diffusive: f64,
}

/// Semi-discretization `du/dt = F(u, t)`, linear when `F = A u + g(t)`.
pub trait SemiDiscreteSystem<T: Scalar>: Rhs<T> {
    fn name(&self) -> &'static str;

    fn mesh(&self) -> &Mesh;

    fn jacobian(&self, u: &[T]) -> SparseMatrix<T>;

    /// Boundary forcing `g(t)`; zero for every model here.
    fn forcing(&self, _t: f64) -> Vec<T> {
        vec![T::zero(); self.dim()]
    }

    /// `A` when the system is linear.
    fn linear_matrix(&self) -> Option<&SparseMatrix<T>> {
        None
    }

    fn is_linear(&self) -> bool {
        self.linear_matrix().is_some()
    }

    fn initial_state(&self) -> Vec<T>;

    fn wave_speeds(&self, u: &[T]) -> WaveSpeeds;
}

/// Courant number and diffusive stability parameter of a step.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityParams {
    /// `max |a| dt / dx`, maximized over axes.
    pub courant: f64,
    /// `max ν dt / dx²`, maximized over axes.
    pub mu: f64,
    /// Courant number per axis.
    pub courant_axes: Vec<f64>,
}

pub fn stability_params<T: Scalar, S: SemiDiscreteSystem<T> + ?Sized>(system: &S, u: &[T], dt: f64) -> StabilityParams {
    let speeds = system.wave_speeds(u);
    let mesh = system.mesh();
    let courant_axes: Vec<f64> = speeds.advective.iter().enumerate().map(|(k, a)| a * dt / mesh.dx(k)).collect();
    let courant = courant_axes.iter().copied().fold(0.0, f64::max);
    let mu = (0..mesh.dim()).map(|k| speeds.diffusive * dt / mesh.dx(k).powi(2)).fold(0.0, f64::max);
    StabilityParams { courant, mu, courant_axes }
}

/// Gaussian `exp(-|x - c|² / (2σ²))`.
pub fn gaussian(x: &[f64], center: &[f64], sigma: f64) -> f64 {
    let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
    (-r2 / (2.0 * sigma * sigma)).exp()
}

fn check_diffusivity(nu: f64) -> Result<()> {
    if nu < 0.0 || !nu.is_finite() {
        return Err(LemError::InvalidParameter(format!("diffusivity must be finite and >= 0, got {nu}")));
    }
    Ok(())
}

/// `A u + g` for a linear model.
fn linear_rhs<T: Scalar>(a: &SparseMatrix<T>, u: &[T], out: &mut [T]) {
    a.matvec_into(u, out);
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use crate::scalar::norm_inf;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Max relative discrepancy between `J v` and central differences of
    /// the right-hand side along `v`, over `trials` random states.
    pub fn jacobian_fd_discrepancy<S: SemiDiscreteSystem<f64>>(sys: &S, trials: usize, seed: u64, state: impl Fn(&mut ChaCha8Rng, usize) -> f64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = sys.dim();
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let u: Vec<f64> = (0..n).map(|i| state(&mut rng, i)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h = 1e-6 * (1.0 + norm_inf(&u));
            let up: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + h * b).collect();
            let um: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - h * b).collect();
            let fd: Vec<f64> = sys.rhs(&up, 0.0).iter().zip(sys.rhs(&um, 0.0)).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            let jv = sys.jacobian(&u).matvec(&v).unwrap();
            let diff: Vec<f64> = fd.iter().zip(&jv).map(|(a, b)| a - b).collect();
            worst = worst.max(norm_inf(&diff) / norm_inf(&jv).max(1e-300));
        }
        worst
    }
}
