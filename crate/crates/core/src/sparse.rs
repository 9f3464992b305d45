//! Sparse operators in compressed row form, built from coordinate triplets.
//!
//! The semi-discrete operators in this crate are banded (or cyclically banded)
//! and small enough that restriction to an index set and bandwidth queries are
//! done directly on the stored coordinates.

use std::ops::Range;

use crate::dense::DenseMatrix;
use crate::error::{LemError, Result};
use crate::scalar::Scalar;

/// Sorted, duplicate-free list of global degree-of-freedom indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndexSet {
    indices: Vec<usize>,
}

impl IndexSet {
    /// Validates that `indices` is strictly increasing.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(LemError::InvalidParameter(format!(
                "index set not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(Self { indices })
    }

    pub fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    pub fn range(r: Range<usize>) -> Self {
        Self { indices: r.collect() }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn is_contiguous(&self) -> bool {
        match (self.indices.first(), self.indices.last()) {
            (Some(&a), Some(&b)) => b - a + 1 == self.indices.len(),
            _ => true,
        }
    }

    /// Local position of a global index, if present.
    pub fn position(&self, global: usize) -> Option<usize> {
        if self.is_contiguous() {
            let first = *self.indices.first()?;
            let k = global.checked_sub(first)?;
            (k < self.indices.len()).then_some(k)
        } else {
            self.indices.binary_search(&global).ok()
        }
    }

    pub fn contains(&self, global: usize) -> bool {
        self.position(global).is_some()
    }

    pub fn max(&self) -> Option<usize> {
        self.indices.last().copied()
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.indices);
        v.extend_from_slice(&other.indices);
        IndexSet::from_unsorted(v)
    }

    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        IndexSet {
            indices: self.iter().filter(|&i| !other.contains(i)).collect(),
        }
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        self.iter().all(|i| !other.contains(i))
    }

    /// Dense lookup table from global index to local position.
    fn lookup(&self, dim: usize) -> Vec<usize> {
        let mut map = vec![usize::MAX; dim];
        for (k, i) in self.iter().enumerate() {
            map[i] = k;
        }
        map
    }

    pub fn gather<T: Copy>(&self, global: &[T]) -> Vec<T> {
        self.iter().map(|i| global[i]).collect()
    }

    fn check(&self, dim: usize) -> Result<()> {
        match self.max() {
            Some(m) if m >= dim => Err(LemError::IndexOutOfRange { index: m, dim }),
            _ => Ok(()),
        }
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        IndexSet::from_unsorted(iter.into_iter().collect())
    }
}

/// Sparse matrix over a real or complex scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// Builds from coordinate triplets; duplicates are rejected.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, T)>) -> Result<Self> {
        for &(r, c, _) in &triplets {
            if r >= n_rows {
                return Err(LemError::IndexOutOfRange { index: r, dim: n_rows });
            }
            if c >= n_cols {
                return Err(LemError::IndexOutOfRange { index: c, dim: n_cols });
            }
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        if let Some(w) = triplets.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(LemError::DuplicateEntry { row: w[0].0, col: w[0].1 });
        }
        Ok(Self::from_sorted(n_rows, n_cols, triplets))
    }

    /// Builds from triplets, summing duplicates and dropping exact zeros.
    /// Stencil assembly on small periodic meshes naturally produces repeats.
    pub fn from_triplets_summed(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, T)>) -> Result<Self> {
        for &(r, c, _) in &triplets {
            if r >= n_rows || c >= n_cols {
                return Err(LemError::IndexOutOfRange { index: r.max(c), dim: n_rows.min(n_cols) });
            }
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, T)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != T::zero());
        Ok(Self::from_sorted(n_rows, n_cols, merged))
    }

    fn from_sorted(n_rows: usize, n_cols: usize, triplets: Vec<(usize, usize, T)>) -> Self {
        let mut row_ptr = vec![0usize; n_rows + 1];
        for &(r, _, _) in &triplets {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let (col_idx, values) = triplets.into_iter().map(|(_, c, v)| (c, v)).unzip();
        Self { n_rows, n_cols, row_ptr, col_idx, values }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self::from_sorted(n_rows, n_cols, Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_sorted(n, n, (0..n).map(|i| (i, i, T::one())).collect())
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_sorted(n, n, diag.iter().enumerate().map(|(i, &d)| (i, i, d)).filter(|e| e.2 != T::zero()).collect())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n_rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i).find(|&(c, _)| c == j).map_or(T::zero(), |(_, v)| v)
    }

    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n_cols {
            return Err(LemError::DimensionMismatch { expected: self.n_cols, got: x.len() });
        }
        let mut y = vec![T::zero(); self.n_rows];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    /// Unchecked-length product `y <- A x`.
    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            let mut acc = T::zero();
            for (c, v) in self.col_idx[span.clone()].iter().zip(&self.values[span]) {
                acc += *v * x[*c];
            }
            *yi = acc;
        }
    }

    /// Submatrix `A[rows, cols]`, reindexed locally. Couplings to columns
    /// outside `cols` are dropped.
    pub fn restrict(&self, rows: &IndexSet, cols: &IndexSet) -> Result<Self> {
        rows.check(self.n_rows)?;
        cols.check(self.n_cols)?;
        let map = cols.lookup(self.n_cols);
        let mut triplets = Vec::new();
        for (li, gi) in rows.iter().enumerate() {
            for (gc, v) in self.row(gi) {
                let lc = map[gc];
                if lc != usize::MAX {
                    triplets.push((li, lc, v));
                }
            }
        }
        Ok(Self::from_sorted(rows.len(), cols.len(), triplets))
    }

    /// Splits `A[set, :]` into the square block `A[set, set]` and the
    /// exterior coupling `A[set, not set]`, the latter keeping global columns.
    pub fn split_restrict(&self, set: &IndexSet) -> Result<(Self, Self)> {
        set.check(self.n_rows)?;
        set.check(self.n_cols)?;
        let map = set.lookup(self.n_cols);
        let mut inner = Vec::new();
        let mut outer = Vec::new();
        for (li, gi) in set.iter().enumerate() {
            for (gc, v) in self.row(gi) {
                match map[gc] {
                    usize::MAX => outer.push((li, gc, v)),
                    lc => inner.push((li, lc, v)),
                }
            }
        }
        Ok((
            Self::from_sorted(set.len(), set.len(), inner),
            Self::from_sorted(set.len(), self.n_cols, outer),
        ))
    }

    /// Largest modulus over stored entries; zero for an empty matrix.
    pub fn max_abs_entry(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }

    /// Effective bandwidth `max |i - j|` over stored nonzeros.
    pub fn bandwidth(&self) -> usize {
        self.triplets()
            .filter(|e| e.2 != T::zero())
            .map(|(i, j, _)| i.abs_diff(j))
            .max()
            .unwrap_or(0)
    }

    /// Lower and upper bandwidths `(kl, ku)`.
    pub fn lower_upper_bandwidth(&self) -> (usize, usize) {
        self.triplets().fold((0, 0), |(kl, ku), (i, j, _)| {
            if i > j {
                (kl.max(i - j), ku)
            } else {
                (kl, ku.max(j - i))
            }
        })
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut t: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v.conj())).collect();
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        Self::from_sorted(self.n_cols, self.n_rows, t)
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: T, other: &Self) -> Result<Self> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(LemError::DimensionMismatch { expected: self.n_rows, got: other.n_rows });
        }
        let t = self.triplets().chain(other.triplets().map(|(i, j, v)| (i, j, s * v))).collect();
        Self::from_triplets_summed(self.n_rows, self.n_cols, t)
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.n_rows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }
}
