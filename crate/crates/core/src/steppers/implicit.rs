//! Linearly implicit Crank-Nicolson with a direct banded solver.

use crate::dense::{DenseMatrix, Lu};
use crate::error::{LemError, Result};
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

/// LU factorization with partial pivoting of a matrix with `kl` sub- and
/// `ku` super-diagonals. Row `i` stores columns `i - kl ..= i + ku + kl`;
/// the extra `kl` columns absorb fill from row interchanges.
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    band: Vec<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn factor(a: &SparseMatrix<T>) -> Result<Self> {
        if a.n_rows() != a.n_cols() {
            return Err(LemError::DimensionMismatch { expected: a.n_rows(), got: a.n_cols() });
        }
        let n = a.n_rows();
        let (kl, ku) = a.lower_upper_bandwidth();
        let width = 2 * kl + ku + 1;
        let mut lu = Self { n, kl, ku, width, band: vec![T::zero(); n * width], pivots: vec![0; n] };
        for (i, j, v) in a.triplets() {
            *lu.at_mut(i, j) = v;
        }
        lu.eliminate()?;
        Ok(lu)
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    fn at(&self, i: usize, j: usize) -> T {
        self.band[self.slot(i, j)]
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        let s = self.slot(i, j);
        &mut self.band[s]
    }

    fn eliminate(&mut self) -> Result<()> {
        let n = self.n;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + self.ku + self.kl).min(n - 1);
            let p = (k..=last_row).max_by(|&a, &b| self.at(a, k).modulus().total_cmp(&self.at(b, k).modulus())).unwrap_or(k);
            self.pivots[k] = p;
            if self.at(p, k).modulus() == 0.0 {
                return Err(LemError::Singular("banded LU"));
            }
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.slot(k, j), self.slot(p, j));
                    self.band.swap(a, b);
                }
            }
            let pivot = self.at(k, k);
            for i in k + 1..=last_row {
                let factor = self.at(i, k) / pivot;
                *self.at_mut(i, k) = factor;
                if factor == T::zero() {
                    continue;
                }
                for j in k + 1..=last_col {
                    let ukj = self.at(k, j);
                    *self.at_mut(i, j) -= factor * ukj;
                }
            }
        }
        Ok(())
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + self.kl).min(n - 1) {
                b[i] -= self.at(i, k) * bk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for j in k + 1..=(k + self.ku + self.kl).min(n - 1) {
                acc -= self.at(k, j) * b[j];
            }
            b[k] = acc / self.at(k, k);
        }
    }
}

/// Direct solver for `I - (dt/2) J`, banded when the bandwidth is small and
/// dense otherwise (cyclic operators couple the first and last rows).
#[derive(Debug, Clone)]
pub enum ShiftedSolver<T> {
    Banded(BandedLu<T>),
    Dense(Lu<T>),
}

/// Largest order for which a dense fallback factorization is attempted.
pub const DENSE_SOLVE_LIMIT: usize = 4000;

impl<T: Scalar> ShiftedSolver<T> {
    pub fn new(jacobian: &SparseMatrix<T>, dt: f64) -> Result<Self> {
        let n = jacobian.n_rows();
        let shifted = SparseMatrix::identity(n).add_scaled(T::from_real(-0.5 * dt), jacobian)?;
        let (kl, ku) = shifted.lower_upper_bandwidth();
        if (2 * kl + ku + 1) * 4 <= n || n > DENSE_SOLVE_LIMIT {
            Ok(Self::Banded(BandedLu::factor(&shifted)?))
        } else {
            let dense: DenseMatrix<T> = shifted.to_dense();
            Ok(Self::Dense(dense.lu()?))
        }
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        match self {
            Self::Banded(lu) => {
                let mut x = rhs.to_vec();
                lu.solve_in_place(&mut x);
                x
            }
            Self::Dense(lu) => lu.solve_vec(rhs),
        }
    }
}

/// `u + dt (I - dt/2 J)^{-1} F(u)`: the trapezoidal rule for linear
/// problems and a second-order linearly implicit scheme with exact `J`.
pub fn step_crank_nicolson<T: Scalar>(u: &[T], f: &[T], dt: f64, solver: &ShiftedSolver<T>) -> Vec<T> {
    let w = solver.solve(f);
    let step = T::from_real(dt);
    u.iter().zip(w).map(|(a, b)| *a + step * b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(n: usize, kl: usize, ku: usize, seed: u64) -> SparseMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // Weak diagonal so that pivoting actually happens.
                t.push((i, j, rng.gen_range(-1.0..1.0) * if i == j { 0.1 } else { 1.0 }));
            }
        }
        SparseMatrix::from_triplets(n, n, t).unwrap()
    }

    #[test]
    fn banded_solve_matches_dense() {
        let a = random_banded(60, 3, 2, 5);
        let x: Vec<f64> = (0..60).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.matvec(&x).unwrap();
        let lu = BandedLu::factor(&a).unwrap();
        let mut y = b.clone();
        lu.solve_in_place(&mut y);
        assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-9));
    }

    #[test]
    fn singular_band_detected() {
        let a = SparseMatrix::from_triplets(3, 3, vec![(0, 0, 1.0), (1, 0, 1.0), (2, 2, 1.0)]).unwrap();
        assert!(BandedLu::factor(&a).is_err());
    }

    #[test]
    fn trapezoidal_rule_for_scalar_decay() {
        let j = SparseMatrix::from_diagonal(&[-2.0]);
        let solver = ShiftedSolver::new(&j, 0.1).unwrap();
        let next = step_crank_nicolson(&[1.0], &[-2.0], 0.1, &solver);
        assert!((next[0] - 0.9 / 1.1).abs() < 1e-15);
    }
}
