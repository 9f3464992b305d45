//! Row-major dense matrices for subdomain-sized exponentials.

use std::ops::{Index, IndexMut};

use crate::error::{LemError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LemError::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copy of the block `[r0..r0+nr, c0..c0+nc]`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            let dst = (r0 + i) * self.cols + c0;
            self.data[dst..dst + b.cols].copy_from_slice(b.row(i));
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut c = Self::zeros(self.rows, other.cols);
        T::gemm(self.rows, self.cols, other.cols, T::one(), &self.data, &other.data, T::zero(), &mut c.data);
        c
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| *a * *b).sum()).collect()
    }

    pub fn scale_mut(&mut self, s: T) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut m = self.clone();
        m.scale_mut(s);
        m
    }

    /// `self <- self + s * other`
    pub fn add_scaled_mut(&mut self, s: T, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * *b;
        }
    }

    pub fn add_identity_mut(&mut self, s: T) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += s;
        }
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v.modulus();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Induced infinity-norm (max row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows).map(|i| self.row(i).iter().map(|v| v.modulus()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Operator 2-norm estimate by power iteration on `A^H A`.
    pub fn norm2_estimate(&self, iters: usize) -> f64 {
        let ah = self.adjoint();
        let mut x: Vec<T> = (0..self.cols).map(|i| T::from_real(1.0 + 0.01 * i as f64)).collect();
        let mut sigma = 0.0;
        for _ in 0..iters {
            let nx = crate::scalar::norm2(&x);
            if nx == 0.0 {
                return 0.0;
            }
            x.iter_mut().for_each(|v| *v = v.scale(1.0 / nx));
            let y = self.matvec(&x);
            sigma = crate::scalar::norm2(&y);
            x = ah.matvec(&y);
        }
        sigma
    }

    pub fn lu(&self) -> Result<Lu<T>> {
        Lu::factor(self.clone())
    }

    /// Solves `self * X = rhs`.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        let lu = self.lu()?;
        let mut x = rhs.clone();
        lu.solve_in_place(&mut x);
        Ok(x)
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(mut a: DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(LemError::DimensionMismatch { expected: a.rows, got: a.cols });
        }
        let n = a.rows;
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].modulus().total_cmp(&a[(j, k)].modulus()))
                .unwrap_or(k);
            if a[(p, k)].modulus() == 0.0 {
                return Err(LemError::Singular("LU factorization"));
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[(k, k)];
            let (upper, lower) = a.data.split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n + k + 1..k * n + n];
            for row in lower.chunks_exact_mut(n) {
                let l = row[k] / pivot;
                row[k] = l;
                if l != T::zero() {
                    for (x, u) in row[k + 1..].iter_mut().zip(pivot_row) {
                        *x -= l * *u;
                    }
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    /// Overwrites `b` (n x m) with `A^{-1} b`. Triangular solves are blocked
    /// so the bulk of the work runs through gemm.
    pub fn solve_in_place(&self, b: &mut DenseMatrix<T>) {
        const NB: usize = 48;
        let n = self.lu.rows;
        let m = b.cols;
        assert_eq!(b.rows, n);
        let lu = &self.lu.data;
        let mut x = vec![T::zero(); n * m];
        for (i, &p) in self.perm.iter().enumerate() {
            x[i * m..(i + 1) * m].copy_from_slice(b.row(p));
        }
        // forward, unit lower
        let mut i0 = 0;
        while i0 < n {
            let i1 = (i0 + NB).min(n);
            let (done, rest) = x.split_at_mut(i0 * m);
            if i0 > 0 {
                T::gemm_strided(i1 - i0, i0, m, -T::one(), &lu[i0 * n..], n, done, m, T::one(), rest, m);
            }
            for i in i0..i1 {
                let (blk, cur) = rest.split_at_mut((i - i0) * m);
                let xi = &mut cur[..m];
                for k in i0..i {
                    let l = lu[i * n + k];
                    if l != T::zero() {
                        for (a, b) in xi.iter_mut().zip(&blk[(k - i0) * m..(k - i0 + 1) * m]) {
                            *a -= l * *b;
                        }
                    }
                }
            }
            i0 = i1;
        }
        // backward, upper
        let mut i1 = n;
        while i1 > 0 {
            let i0 = i1.saturating_sub(NB);
            let (head, tail) = x.split_at_mut(i1 * m);
            if i1 < n {
                T::gemm_strided(i1 - i0, n - i1, m, -T::one(), &lu[i0 * n + i1..], n, tail, m, T::one(), &mut head[i0 * m..], m);
            }
            let blk = &mut head[i0 * m..];
            for i in (i0..i1).rev() {
                let (cur, below) = blk.split_at_mut((i - i0 + 1) * m);
                let xi = &mut cur[(i - i0) * m..];
                for k in i + 1..i1 {
                    let u = lu[i * n + k];
                    if u != T::zero() {
                        for (a, b) in xi.iter_mut().zip(&below[(k - i - 1) * m..(k - i) * m]) {
                            *a -= u * *b;
                        }
                    }
                }
                let d = lu[i * n + i];
                xi.iter_mut().for_each(|v| *v /= d);
            }
            i1 = i0;
        }
        b.data = x;
    }

    pub fn solve_vec(&self, rhs: &[T]) -> Vec<T> {
        let mut b = DenseMatrix { rows: rhs.len(), cols: 1, data: rhs.to_vec() };
        self.solve_in_place(&mut b);
        b.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn matmul_matches_naive() {
        let a = DenseMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 - 5.0);
        let b = DenseMatrix::from_fn(4, 2, |i, j| (i as f64) * 0.5 - j as f64);
        let c = a.matmul(&b);
        for i in 0..3 {
            for j in 0..2 {
                let expected: f64 = (0..4).map(|k| a[(i, k)] * b[(k, j)]).sum();
                assert!((c[(i, j)] - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn complex_matmul_matches_naive() {
        let a = DenseMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64, j as f64 - 1.0));
        let b = DenseMatrix::from_fn(3, 3, |i, j| Complex64::new(1.0 - j as f64, 0.5 * i as f64));
        let c = a.matmul(&b);
        for i in 0..3 {
            for j in 0..3 {
                let expected: Complex64 = (0..3).map(|k| a[(i, k)] * b[(k, j)]).sum();
                assert!((c[(i, j)] - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn lu_solves_with_pivoting() {
        let a = DenseMatrix::from_row_major(3, 3, vec![0.0, 2.0, 1.0, 1.0, 1.0, 1.0, 4.0, -1.0, 3.0]).unwrap();
        let x_true = [1.0, -2.0, 0.5];
        let b = a.matvec(&x_true);
        let x = a.lu().unwrap().solve_vec(&b);
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn blocked_solve_matches_residual() {
        let n = 130;
        let a = DenseMatrix::from_fn(n, n, |i, j| if i == j { 4.0 } else { ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.5 });
        let b = DenseMatrix::from_fn(n, 5, |i, j| (i as f64 - j as f64).sin());
        let x = a.solve(&b).unwrap();
        let r = a.matmul(&x);
        for i in 0..n {
            for j in 0..5 {
                assert!((r[(i, j)] - b[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_matrix_reported() {
        let a = DenseMatrix::<f64>::zeros(2, 2);
        assert!(matches!(a.lu(), Err(LemError::Singular(_))));
    }

    #[test]
    fn norms() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, -2.0, 3.0, 4.0]).unwrap();
        assert_eq!(a.norm_one(), 6.0);
        assert_eq!(a.norm_inf(), 7.0);
    }
}
