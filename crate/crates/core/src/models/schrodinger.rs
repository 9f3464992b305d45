use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{gaussian, linear_rhs, Axis, Boundary, Mesh, Rhs, SemiDiscreteSystem, WaveSpeeds};
use crate::error::Result;
use crate::sparse::SparseMatrix;

/// `c_t = (i/2) c_xx - i (κ/2) x² c` on `[-L/2, L/2)`, periodic, centered
/// second differences.
#[derive(Debug, Clone)]
pub struct Schrodinger1d {
    mesh: Mesh,
    kappa: f64,
    matrix: SparseMatrix<Complex64>,
    initial: Vec<Complex64>,
}

/// Gaussian datum of width `L/20` centered at the origin.
pub fn build_schrodinger_1d(n: usize, length: f64, kappa: f64) -> Result<Schrodinger1d> {
    let axis = Axis::new(-0.5 * length, length, n, Boundary::Periodic)?;
    let dx = axis.dx();
    let off = Complex64::new(0.0, 0.5 / (dx * dx));
    let mut triplets = Vec::with_capacity(3 * n);
    for j in 0..n {
        let x = axis.coord(j);
        triplets.push((j, j, Complex64::new(0.0, -1.0 / (dx * dx) - 0.5 * kappa * x * x)));
        triplets.push((j, axis.neighbor(j, -1).unwrap(), off));
        triplets.push((j, axis.neighbor(j, 1).unwrap(), off));
    }
    let matrix = SparseMatrix::from_triplets_summed(n, n, triplets)?;
    let sigma = length / 20.0;
    let initial = axis.coords().iter().map(|&x| Complex64::new(gaussian(&[x], &[0.0], sigma), 0.0)).collect();
    Ok(Schrodinger1d { mesh: Mesh::line(axis), kappa, matrix, initial })
}

impl Schrodinger1d {
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Fourier pseudospectral semi-discretization of the same problem on the
    /// same nodes, used as a reference.
    pub fn pseudospectral(&self) -> SchrodingerPseudospectral {
        SchrodingerPseudospectral::new(self.mesh.axis(0), self.kappa)
    }
}

impl Rhs<Complex64> for Schrodinger1d {
    fn dim(&self) -> usize {
        self.mesh.len()
    }

    fn rhs_into(&self, u: &[Complex64], _t: f64, out: &mut [Complex64]) {
        linear_rhs(&self.matrix, u, out);
    }
}

impl SemiDiscreteSystem<Complex64> for Schrodinger1d {
    fn name(&self) -> &'static str {
        "schrodinger1d"
    }

    fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    fn jacobian(&self, _u: &[Complex64]) -> SparseMatrix<Complex64> {
        self.matrix.clone()
    }

    fn linear_matrix(&self) -> Option<&SparseMatrix<Complex64>> {
        Some(&self.matrix)
    }

    fn initial_state(&self) -> Vec<Complex64> {
        self.initial.clone()
    }

    fn wave_speeds(&self, _u: &[Complex64]) -> WaveSpeeds {
        WaveSpeeds { advective: vec![0.0], diffusive: 0.5 }
    }
}

/// Spectral second derivative plus the pointwise potential.
pub struct SchrodingerPseudospectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `-(k²)/2 · i / n`, folding the inverse transform normalization.
    symbol: Vec<Complex64>,
    potential: Vec<Complex64>,
}

impl SchrodingerPseudospectral {
    fn new(axis: &Axis, kappa: f64) -> Self {
        let n = axis.n;
        let mut planner = FftPlanner::new();
        let symbol = (0..n)
            .map(|k| {
                let signed = if 2 * k <= n { k as f64 } else { k as f64 - n as f64 };
                let wave = 2.0 * std::f64::consts::PI * signed / axis.extent;
                Complex64::new(0.0, -0.5 * wave * wave / n as f64)
            })
            .collect();
        let potential = axis.coords().iter().map(|x| Complex64::new(0.0, -0.5 * kappa * x * x)).collect();
        Self { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n), symbol, potential }
    }
}

impl Rhs<Complex64> for SchrodingerPseudospectral {
    fn dim(&self) -> usize {
        self.symbol.len()
    }

    fn rhs_into(&self, u: &[Complex64], _t: f64, out: &mut [Complex64]) {
        out.copy_from_slice(u);
        self.forward.process(out);
        out.iter_mut().zip(&self.symbol).for_each(|(o, s)| *o *= s);
        self.inverse.process(out);
        for ((o, v), p) in out.iter_mut().zip(u).zip(&self.potential) {
            *o += p * v;
        }
    }
}
