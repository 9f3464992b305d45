//! Overlapping decompositions `M_i = D_i ∪ B_i` and the local problems
//! posed on them.
//!
//! Interiors `D_i` are disjoint and cover the mesh. Each buffer `B_i` holds
//! up to `B` mesh nodes (or mesh columns in 2D) on either side of `D_i`,
//! wrapping across periodic ends and clipped at Dirichlet walls. Values
//! outside `M_i` are frozen at the start of the step and act as Dirichlet
//! data for the local problem.

use std::fmt;
use std::ops::Range;

use crate::error::{LemError, Result};
use crate::models::{Boundary, Mesh, SemiDiscreteSystem, StabilityParams};
use crate::scalar::Scalar;
use crate::sparse::{IndexSet, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Contiguous blocks of a 1D mesh.
    Blocks1D,
    /// Blocks of whole mesh columns of a 2D mesh; only the horizontal axis
    /// is decomposed.
    Columns2D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    layout: Layout,
    buffer_width: usize,
    n: usize,
    /// Interior extents along the decomposed axis.
    extents: Vec<Range<usize>>,
    interiors: Vec<IndexSet>,
    buffers: Vec<IndexSet>,
    locals: Vec<IndexSet>,
    /// Position of each interior index inside its local set.
    interior_positions: Vec<Vec<usize>>,
}

/// Splits `n` nodes along the decomposed axis into `d` contiguous blocks;
/// leading blocks absorb the remainder. With `d > 1`, every block must be
/// strictly wider than the buffer.
pub fn make_partition(mesh: &Mesh, d: usize, b: usize, layout: Layout) -> Result<Partition> {
    let (axis, column) = match (layout, mesh.dim()) {
        (Layout::Blocks1D, 1) => (mesh.axis(0), 1),
        (Layout::Columns2D, 2) => (mesh.axis(0), mesh.axis(1).n),
        (layout, dim) => return Err(LemError::InvalidParameter(format!("layout {layout:?} does not apply to a {dim}D mesh"))),
    };
    let n_axis = axis.n;
    if d == 0 || d > n_axis {
        return Err(LemError::InvalidParameter(format!("subdomain count must lie in 1..={n_axis}, got {d}")));
    }
    let base = n_axis / d;
    if d > 1 && base <= b {
        return Err(LemError::BufferTooWide { interior: base, buffer: b });
    }
    let extra = n_axis % d;
    let mut extents = Vec::with_capacity(d);
    let mut start = 0;
    for i in 0..d {
        let len = base + usize::from(i < extra);
        extents.push(start..start + len);
        start += len;
    }

    let expand = |cols: &mut dyn Iterator<Item = usize>| -> IndexSet { cols.flat_map(|c| c * column..(c + 1) * column).collect() };
    let mut interiors = Vec::with_capacity(d);
    let mut buffers = Vec::with_capacity(d);
    let mut locals = Vec::with_capacity(d);
    let mut interior_positions = Vec::with_capacity(d);
    for ext in &extents {
        let interior = expand(&mut ext.clone());
        let mut buffer_cols = Vec::new();
        if d > 1 {
            for k in 1..=b as isize {
                for c in [ext.start as isize - k, ext.end as isize - 1 + k] {
                    let wrapped = match axis.boundary {
                        Boundary::Periodic => Some(c.rem_euclid(n_axis as isize) as usize),
                        Boundary::Dirichlet => (0..n_axis as isize).contains(&c).then_some(c as usize),
                    };
                    if let Some(c) = wrapped.filter(|c| !ext.contains(c)) {
                        buffer_cols.push(c);
                    }
                }
            }
        }
        let buffer = expand(&mut buffer_cols.into_iter());
        let local = interior.union(&buffer);
        interior_positions.push(interior.iter().map(|g| local.position(g).expect("interior lies in local set")).collect());
        interiors.push(interior);
        buffers.push(buffer);
        locals.push(local);
    }
    Ok(Partition { layout, buffer_width: b, n: mesh.len(), extents, interiors, buffers, locals, interior_positions })
}

/// Empirical buffer width `ceil(2 max(C, μ)) + 6`, at least 4.
pub fn suggest_buffer(params: &StabilityParams) -> usize {
    let widest = params.courant.max(params.mu).max(0.0);
    ((2.0 * widest).ceil() as usize + 6).max(4)
}

impl Partition {
    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn count(&self) -> usize {
        self.interiors.len()
    }

    pub fn buffer_width(&self) -> usize {
        self.buffer_width
    }

    /// Number of global unknowns.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn interior(&self, i: usize) -> &IndexSet {
        &self.interiors[i]
    }

    pub fn buffer(&self, i: usize) -> &IndexSet {
        &self.buffers[i]
    }

    pub fn local(&self, i: usize) -> &IndexSet {
        &self.locals[i]
    }

    pub fn interiors(&self) -> &[IndexSet] {
        &self.interiors
    }

    pub fn locals(&self) -> &[IndexSet] {
        &self.locals
    }

    /// Positions of the interior unknowns of subdomain `i` within its local
    /// vector.
    pub fn interior_positions(&self, i: usize) -> &[usize] {
        &self.interior_positions[i]
    }

    /// Unknowns updated per step, buffers included.
    pub fn dof_updates_per_step(&self) -> usize {
        self.locals.iter().map(IndexSet::len).sum()
    }

    fn check_subdomain(&self, i: usize) -> Result<()> {
        if i >= self.count() {
            return Err(LemError::InvalidParameter(format!("subdomain {i} out of range for {} subdomains", self.count())));
        }
        Ok(())
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "partition {:?}: {} subdomains, buffer width {}, {} unknowns", self.layout, self.count(), self.buffer_width, self.n)?;
        for (i, ext) in self.extents.iter().enumerate() {
            writeln!(
                f,
                "  {i}: interior [{}, {}) ({} unknowns), buffer {} unknowns, local {} unknowns",
                ext.start,
                ext.end,
                self.interiors[i].len(),
                self.buffers[i].len(),
                self.locals[i].len()
            )?;
        }
        Ok(())
    }
}

/// Writes every interior value of each local result into `u_next`; buffer
/// values are discarded.
pub fn gather_overwrite<T: Scalar>(part: &Partition, locals_out: &[Vec<T>], u_next: &mut [T]) -> Result<()> {
    if locals_out.len() < part.count() {
        return Err(LemError::MissingSubdomain(locals_out.len()));
    }
    if u_next.len() != part.n {
        return Err(LemError::DimensionMismatch { expected: part.n, got: u_next.len() });
    }
    #[cfg(debug_assertions)]
    let mut writes = vec![0u8; part.n];
    for (i, out) in locals_out.iter().enumerate().take(part.count()) {
        if out.len() != part.locals[i].len() {
            return Err(LemError::DimensionMismatch { expected: part.locals[i].len(), got: out.len() });
        }
        for (g, &p) in part.interiors[i].iter().zip(&part.interior_positions[i]) {
            u_next[g] = out[p];
            #[cfg(debug_assertions)]
            {
                writes[g] += 1;
            }
        }
    }
    #[cfg(debug_assertions)]
    debug_assert!(writes.iter().all(|&w| w == 1), "every unknown must be written exactly once");
    Ok(())
}

/// How values outside `M_i` enter a local problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExteriorData {
    /// Exterior values frozen at the start of the step.
    #[default]
    Frozen,
    /// Homogeneous truncation: exterior values treated as zero.
    Zero,
}

/// Problem posed on `M_i`, with exterior values held fixed.
#[derive(Debug, Clone)]
pub struct LocalSystem<T: Scalar> {
    owner: usize,
    local_to_global: IndexSet,
    exterior: ExteriorData,
    /// `A[M_i, M_i]` and the exterior coupling `A[M_i, not M_i]` with global
    /// columns, for linear systems.
    linear: Option<(SparseMatrix<T>, SparseMatrix<T>)>,
    /// Global state at the start of the step; exterior entries are what the
    /// local right-hand side sees.
    frozen: Vec<T>,
    boundary_forcing: Vec<T>,
}

/// Local problem of subdomain `i` with exterior data frozen at `u_global`.
pub fn extract_local<T: Scalar, S: SemiDiscreteSystem<T> + ?Sized>(system: &S, part: &Partition, i: usize, u_global: &[T]) -> Result<LocalSystem<T>> {
    extract_local_with(system, part, i, u_global, ExteriorData::Frozen)
}

pub fn extract_local_with<T: Scalar, S: SemiDiscreteSystem<T> + ?Sized>(
    system: &S,
    part: &Partition,
    i: usize,
    u_global: &[T],
    exterior: ExteriorData,
) -> Result<LocalSystem<T>> {
    part.check_subdomain(i)?;
    if u_global.len() != system.dim() || part.n != system.dim() {
        return Err(LemError::DimensionMismatch { expected: system.dim(), got: u_global.len() });
    }
    let local_to_global = part.locals[i].clone();
    let linear = system.linear_matrix().map(|a| a.split_restrict(&local_to_global)).transpose()?;
    let mut local = LocalSystem { owner: i, local_to_global, exterior, linear, frozen: Vec::new(), boundary_forcing: Vec::new() };
    local.update_exterior(system, u_global)?;
    Ok(local)
}

impl<T: Scalar> LocalSystem<T> {
    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn local_to_global(&self) -> &IndexSet {
        &self.local_to_global
    }

    pub fn dim(&self) -> usize {
        self.local_to_global.len()
    }

    /// `A[M_i, M_i]` for linear systems.
    pub fn matrix(&self) -> Option<&SparseMatrix<T>> {
        self.linear.as_ref().map(|(inner, _)| inner)
    }

    /// Contribution of the exterior values to the local right-hand side at
    /// the frozen state. Stored for linear systems, evaluated on demand
    /// otherwise.
    pub fn boundary_forcing<S: SemiDiscreteSystem<T> + ?Sized>(&self, system: &S, t: f64) -> Vec<T> {
        if self.linear.is_some() {
            return self.boundary_forcing.clone();
        }
        let with_exterior = self.local_to_global.gather(&system.rhs(&self.frozen, t));
        let mut isolated = vec![T::zero(); self.frozen.len()];
        for g in self.local_to_global.iter() {
            isolated[g] = self.frozen[g];
        }
        let without = self.local_to_global.gather(&system.rhs(&isolated, t));
        with_exterior.iter().zip(without).map(|(a, b)| *a - b).collect()
    }

    /// Local restriction of the frozen global state.
    pub fn initial_state(&self) -> Vec<T> {
        self.local_to_global.gather(&self.frozen)
    }

    /// Replaces the frozen exterior data by `u_global`, as at the start of a
    /// new step.
    pub fn update_exterior<S: SemiDiscreteSystem<T> + ?Sized>(&mut self, system: &S, u_global: &[T]) -> Result<()> {
        if u_global.len() != system.dim() {
            return Err(LemError::DimensionMismatch { expected: system.dim(), got: u_global.len() });
        }
        self.frozen.clear();
        self.frozen.extend_from_slice(u_global);
        if self.exterior == ExteriorData::Zero {
            let mut masked = vec![T::zero(); u_global.len()];
            for g in self.local_to_global.iter() {
                masked[g] = u_global[g];
            }
            self.frozen = masked;
        }
        if let Some((_, coupling)) = &self.linear {
            self.boundary_forcing = coupling.matvec(&self.frozen)?;
        }
        Ok(())
    }

    /// Global state with the local values `v` written into `M_i`.
    pub fn embed(&self, v: &[T]) -> Vec<T> {
        let mut full = self.frozen.clone();
        for (g, &x) in self.local_to_global.iter().zip(v) {
            full[g] = x;
        }
        full
    }

    /// Local right-hand side at local state `v`.
    pub fn rhs<S: SemiDiscreteSystem<T> + ?Sized>(&self, system: &S, v: &[T], t: f64) -> Vec<T> {
        match &self.linear {
            Some((inner, _)) => {
                let mut out = vec![T::zero(); v.len()];
                inner.matvec_into(v, &mut out);
                let g = system.forcing(t);
                for ((o, b), gi) in out.iter_mut().zip(&self.boundary_forcing).zip(self.local_to_global.iter()) {
                    *o += *b + g[gi];
                }
                out
            }
            None => self.local_to_global.gather(&system.rhs(&self.embed(v), t)),
        }
    }

    /// Local Jacobian `J[M_i, M_i]` at local state `v`.
    pub fn jacobian<S: SemiDiscreteSystem<T> + ?Sized>(&self, system: &S, v: &[T]) -> Result<SparseMatrix<T>> {
        match &self.linear {
            Some((inner, _)) => Ok(inner.clone()),
            None => self.restrict_jacobian(&system.jacobian(&self.embed(v))),
        }
    }

    /// Restriction of a global Jacobian to `M_i`.
    pub fn restrict_jacobian(&self, global: &SparseMatrix<T>) -> Result<SparseMatrix<T>> {
        global.restrict(&self.local_to_global, &self.local_to_global)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_advdiff_1d, build_advdiff_2d, build_burgers_1d, build_fv_advection_1d, stability_params, Axis, Rhs};

    fn line(n: usize) -> Mesh {
        Mesh::line(Axis::new(0.0, 10.0, n, Boundary::Periodic).unwrap())
    }

    #[test]
    fn even_block_sizes() {
        let p = make_partition(&line(400), 8, 18, Layout::Blocks1D).unwrap();
        assert!(p.interiors().iter().all(|s| s.len() == 50));
        assert!(p.locals().iter().all(|s| s.len() == 86));
        assert_eq!(p.dof_updates_per_step(), 400 + 2 * 18 * 8);
        let p = make_partition(&line(400), 4, 15, Layout::Blocks1D).unwrap();
        assert!(p.interiors().iter().all(|s| s.len() == 100));
        assert!(p.locals().iter().all(|s| s.len() == 130));
    }

    #[test]
    fn single_subdomain_is_global() {
        let p = make_partition(&line(40), 1, 10, Layout::Blocks1D).unwrap();
        assert!(p.buffer(0).is_empty());
        assert_eq!(p.local(0), &IndexSet::range(0..40));
    }

    #[test]
    fn remainder_goes_to_leading_blocks() {
        let p = make_partition(&line(23), 4, 2, Layout::Blocks1D).unwrap();
        let sizes: Vec<usize> = p.interiors().iter().map(IndexSet::len).collect();
        assert_eq!(sizes, vec![6, 6, 6, 5]);
    }

    #[test]
    fn periodic_buffers_wrap() {
        let p = make_partition(&line(40), 4, 3, Layout::Blocks1D).unwrap();
        assert_eq!(p.buffer(0).as_slice(), &[10, 11, 12, 37, 38, 39]);
        for i in 0..4 {
            for g in p.buffer(i).iter() {
                assert!(!p.interior(i).contains(g));
                assert!((0..4).any(|j| j != i && p.interior(j).contains(g)));
            }
        }
    }

    #[test]
    fn dirichlet_buffers_clip() {
        let mesh = Mesh::line(Axis::new(0.0, 1.0, 40, Boundary::Dirichlet).unwrap());
        let p = make_partition(&mesh, 4, 3, Layout::Blocks1D).unwrap();
        assert_eq!(p.buffer(0).as_slice(), &[10, 11, 12]);
        assert_eq!(p.buffer(3).as_slice(), &[27, 28, 29]);
    }

    #[test]
    fn narrow_interiors_are_refused() {
        let err = make_partition(&line(400), 20, 20, Layout::Blocks1D).unwrap_err();
        assert_eq!(err, LemError::BufferTooWide { interior: 20, buffer: 20 });
        assert!(err.to_string().contains("same size as their buffer"));
        assert!(make_partition(&line(400), 20, 15, Layout::Blocks1D).is_ok());
        assert!(make_partition(&line(400), 0, 1, Layout::Blocks1D).is_err());
    }

    #[test]
    fn columns_cover_whole_columns() {
        let sys = build_advdiff_2d(12, 5, 1.0, 1.0, 1.0, 0.0).unwrap();
        let p = make_partition(sys.mesh(), 3, 2, Layout::Columns2D).unwrap();
        assert_eq!(p.interior(1), &IndexSet::range(20..40));
        assert_eq!(p.buffer(1).len(), 4 * 5);
        assert_eq!(p.buffer(0), &IndexSet::range(20..30));
        assert!(make_partition(sys.mesh(), 3, 2, Layout::Blocks1D).is_err());
    }

    #[test]
    fn buffer_suggestion() {
        let params = |c: f64, mu: f64| StabilityParams { courant: c, mu, courant_axes: vec![c] };
        assert_eq!(suggest_buffer(&params(0.0, 0.0)), 6);
        assert_eq!(suggest_buffer(&params(1.0, 1.0)), 8);
        assert_eq!(suggest_buffer(&params(4.0, 4.0)), 14);
    }

    #[test]
    fn local_forcing_bookkeeping() {
        // Pure advection so only the ±u/(2dx) couplings reach outside.
        let sys = build_advdiff_1d(400, 10.0, 1.0, 0.0).unwrap();
        let mesh = sys.mesh().clone();
        let p = make_partition(&mesh, 10, 1, Layout::Blocks1D).unwrap();
        let u: Vec<f64> = (0..400).map(|i| 1.0 + i as f64).collect();
        let local = extract_local(&sys, &p, 1, &u).unwrap();
        assert_eq!(local.local_to_global(), &IndexSet::range(39..81));
        let dx = 0.025;
        let f = local.boundary_forcing(&sys, 0.0);
        assert!((f[0] - u[38] / (2.0 * dx)).abs() < 1e-9);
        assert!((f[41] + u[81] / (2.0 * dx)).abs() < 1e-9);
        assert!(f[1..41].iter().all(|v| *v == 0.0));
        // Local rhs agrees with the global one everywhere in M_i.
        let global = sys.rhs(&u, 0.0);
        let lr = local.rhs(&sys, &local.initial_state(), 0.0);
        for (k, g) in local.local_to_global().iter().enumerate() {
            assert!((lr[k] - global[g]).abs() < 1e-9);
        }
    }

    #[test]
    fn interior_supported_state_needs_no_forcing() {
        let sys = build_burgers_1d(200, 10.0, 0.05).unwrap();
        let p = make_partition(sys.mesh(), 4, 10, Layout::Blocks1D).unwrap();
        let mut u = vec![0.0; 200];
        for v in &mut u[70..90] {
            *v = 0.5;
        }
        let local = extract_local(&sys, &p, 1, &u).unwrap();
        assert!(local.boundary_forcing(&sys, 0.0).iter().all(|v| *v == 0.0));
        let global = sys.rhs(&u, 0.0);
        let lr = local.rhs(&sys, &local.initial_state(), 0.0);
        assert_eq!(lr, local.local_to_global().gather(&global));
    }

    #[test]
    fn nonlinear_local_jacobian_is_restriction() {
        let sys = build_fv_advection_1d(100, 10.0, 1.0).unwrap();
        let p = make_partition(sys.mesh(), 2, 10, Layout::Blocks1D).unwrap();
        let u = sys.initial_state();
        let local = extract_local(&sys, &p, 0, &u).unwrap();
        let j = local.jacobian(&sys, &local.initial_state()).unwrap();
        assert_eq!(j, sys.jacobian(&u).restrict(p.local(0), p.local(0)).unwrap());
        assert!(local.matrix().is_none());
    }

    #[test]
    fn zero_exterior_truncates() {
        let sys = build_advdiff_1d(40, 10.0, 1.0, 0.1).unwrap();
        let p = make_partition(sys.mesh(), 4, 2, Layout::Blocks1D).unwrap();
        let u = vec![1.0; 40];
        let local = extract_local_with(&sys, &p, 0, &u, ExteriorData::Zero).unwrap();
        assert!(local.boundary_forcing(&sys, 0.0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gather_takes_interiors() {
        let p = make_partition(&line(40), 4, 3, Layout::Blocks1D).unwrap();
        let u: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let locals: Vec<Vec<f64>> = (0..4).map(|i| p.local(i).gather(&u)).collect();
        let mut out = vec![0.0; 40];
        gather_overwrite(&p, &locals, &mut out).unwrap();
        assert_eq!(out, u);
        assert_eq!(gather_overwrite(&p, &locals[..3], &mut out), Err(LemError::MissingSubdomain(3)));
    }

    #[test]
    fn stability_example() {
        let sys = build_advdiff_1d(400, 10.0, 1.0, 0.0).unwrap();
        let params = stability_params(&sys, &sys.initial_state(), 0.1);
        assert!((params.courant - 4.0).abs() < 1e-12);
        assert!(extract_local(&sys, &make_partition(sys.mesh(), 2, 4, Layout::Blocks1D).unwrap(), 2, &sys.initial_state()).is_err());
    }

    #[test]
    fn summary_lists_subdomains() {
        let p = make_partition(&line(40), 2, 3, Layout::Blocks1D).unwrap();
        let text = p.to_string();
        assert!(text.contains("2 subdomains"));
        assert!(text.contains("1: interior [20, 40) (20 unknowns), buffer 6 unknowns, local 26 unknowns"));
    }
}
