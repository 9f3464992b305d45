//! Real and complex scalar fields behind one trait, so every kernel runs
//! unchanged on the Schrödinger operator.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex64;
use num_traits::NumAssign;

pub trait Scalar:
    NumAssign + Copy + Send + Sync + Debug + Display + Default + Sum + std::ops::Neg<Output = Self> + 'static
{
    const IS_COMPLEX: bool;

    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn modulus_sqr(self) -> f64;
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn is_finite(self) -> bool;

    fn scale(self, x: f64) -> Self {
        self * Self::from_real(x)
    }

    /// `c <- alpha * a * b + beta * c` for row-major `m x k` times `k x n`
    /// with leading dimensions `lda`, `ldb`, `ldc`.
    #[allow(clippy::too_many_arguments)]
    fn gemm_strided(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        lda: usize,
        b: &[Self],
        ldb: usize,
        beta: Self,
        c: &mut [Self],
        ldc: usize,
    );

    /// Contiguous row-major form of [`Scalar::gemm_strided`].
    #[allow(clippy::too_many_arguments)]
    fn gemm(m: usize, k: usize, n: usize, alpha: Self, a: &[Self], b: &[Self], beta: Self, c: &mut [Self]) {
        Self::gemm_strided(m, k, n, alpha, a, k, b, n, beta, c, n)
    }
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn modulus_sqr(self) -> f64 {
        self * self
    }
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }

    fn gemm_strided(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        lda: usize,
        b: &[Self],
        ldb: usize,
        beta: Self,
        c: &mut [Self],
        ldc: usize,
    ) {
        if m == 0 || n == 0 {
            return;
        }
        check_extents(m, k, n, a.len(), lda, b.len(), ldb, c.len(), ldc);
        // SAFETY: extents checked above.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                alpha,
                a.as_ptr(),
                lda as isize,
                1,
                b.as_ptr(),
                ldb as isize,
                1,
                beta,
                c.as_mut_ptr(),
                ldc as isize,
                1,
            );
        }
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn modulus_sqr(self) -> f64 {
        self.norm_sqr()
    }
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn scale(self, x: f64) -> Self {
        self * x
    }

    fn gemm_strided(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        lda: usize,
        b: &[Self],
        ldb: usize,
        beta: Self,
        c: &mut [Self],
        ldc: usize,
    ) {
        if m == 0 || n == 0 {
            return;
        }
        check_extents(m, k, n, a.len(), lda, b.len(), ldb, c.len(), ldc);
        // SAFETY: extents checked above; Complex64 is layout-compatible with [f64; 2].
        unsafe {
            matrixmultiply::zgemm(
                matrixmultiply::CGemmOption::Standard,
                matrixmultiply::CGemmOption::Standard,
                m,
                k,
                n,
                [alpha.re, alpha.im],
                a.as_ptr() as *const [f64; 2],
                lda as isize,
                1,
                b.as_ptr() as *const [f64; 2],
                ldb as isize,
                1,
                [beta.re, beta.im],
                c.as_mut_ptr() as *mut [f64; 2],
                ldc as isize,
                1,
            );
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn check_extents(m: usize, k: usize, n: usize, la: usize, lda: usize, lb: usize, ldb: usize, lc: usize, ldc: usize) {
    assert!(lda >= k && ldb >= n && ldc >= n, "leading dimension too small");
    assert!(k == 0 || la >= (m - 1) * lda + k, "gemm: a too short");
    assert!(k == 0 || lb >= (k - 1) * ldb + n, "gemm: b too short");
    assert!(lc >= (m - 1) * ldc + n, "gemm: c too short");
}

/// Euclidean norm.
pub fn norm2<T: Scalar>(v: &[T]) -> f64 {
    v.iter().map(|x| x.modulus_sqr()).sum::<f64>().sqrt()
}

/// Max-modulus norm.
pub fn norm_inf<T: Scalar>(v: &[T]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.modulus()))
}

/// Hermitian inner product `sum conj(a_i) b_i`.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| x.conj() * *y).sum()
}

/// `y <- y + alpha x`
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}
