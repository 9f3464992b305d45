use lem_core::dense::DenseMatrix;
use lem_core::expm::{expm_dense, phi_action_krylov, phi_k_dense};
use lem_core::models::{build_advdiff_1d, build_advdiff_2d, build_schrodinger_1d, SemiDiscreteSystem};
use lem_core::partition::{gather_overwrite, make_partition, Layout};
use lem_core::scalar::norm2;
use lem_core::{Complex64, IndexSet, LemError, SparseMatrix};
use proptest::prelude::*;

/// Banded matrix with the given half-bandwidth and entries in (-scale, scale).
fn banded(n: usize, s: usize, scale: f64) -> impl Strategy<Value = SparseMatrix<f64>> {
    let slots: Vec<(usize, usize)> = (0..n).flat_map(|i| (i.saturating_sub(s)..=(i + s).min(n - 1)).map(move |j| (i, j))).collect();
    prop::collection::vec(-scale..scale, slots.len())
        .prop_map(move |vals| SparseMatrix::from_triplets(n, n, slots.iter().zip(vals).map(|(&(i, j), v)| (i, j, v)).collect()).unwrap())
}

fn op_norm_gap(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> f64 {
    let mut d = a.clone();
    d.add_scaled_mut(-1.0, b);
    d.norm_one()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matvec_is_linear(
        a in banded(30, 2, 5.0),
        x in prop::collection::vec(-1.0..1.0f64, 30),
        y in prop::collection::vec(-1.0..1.0f64, 30),
        alpha in -3.0..3.0f64,
        beta in -3.0..3.0f64,
    ) {
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| alpha * p + beta * q).collect();
        let lhs = a.matvec(&combo).unwrap();
        let (ax, ay) = (a.matvec(&x).unwrap(), a.matvec(&y).unwrap());
        let rhs: Vec<f64> = ax.iter().zip(&ay).map(|(p, q)| alpha * p + beta * q).collect();
        let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(p, q)| p - q).collect();
        prop_assert!(norm2(&diff) <= 1e-13 * norm2(&rhs).max(1.0));
    }

    #[test]
    fn restriction_agrees_with_global_product_inside(a in banded(40, 2, 1.0), start in 0usize..20, len in 6usize..20) {
        let set = IndexSet::range(start..start + len);
        let local = a.restrict(&set, &set).unwrap();
        prop_assert!(local.bandwidth() <= a.bandwidth());
        // Supported two nodes away from the ends of the set, so no stencil
        // coupling crosses its boundary.
        let mut x = vec![0.0; 40];
        for (g, v) in x.iter_mut().enumerate().take(start + len - 2).skip(start + 2) {
            *v = (g as f64).sin();
        }
        let global = a.matvec(&x).unwrap();
        let restricted = local.matvec(&set.gather(&x)).unwrap();
        for (k, g) in set.iter().enumerate() {
            prop_assert!((restricted[k] - global[g]).abs() <= 1e-14);
        }
    }

    #[test]
    fn exponential_inverts(a in banded(24, 2, 2.0)) {
        let d = a.to_dense();
        let e = expm_dense(&d).unwrap();
        let inv = expm_dense(&d.scaled(-1.0)).unwrap();
        prop_assert!(op_norm_gap(&e.matmul(&inv), &DenseMatrix::identity(24)) <= 1e-10);
    }

    #[test]
    fn phi_recurrence_holds(a in banded(20, 20, 1.5)) {
        let d = a.to_dense();
        let mut prev = expm_dense(&d).unwrap();
        let mut factorial = 1.0;
        for k in 1..=3 {
            let phi = phi_k_dense(&d, k).unwrap();
            let mut expected = prev.clone();
            expected.add_identity_mut(-1.0 / factorial);
            prop_assert!(op_norm_gap(&d.matmul(&phi), &expected) <= 1e-10 * expected.norm_one().max(1.0));
            factorial *= k as f64;
            prev = phi;
        }
    }

    #[test]
    fn partitions_cover_disjointly(n in 40usize..200, d in 1usize..8, b in 0usize..6) {
        let sys = build_advdiff_1d(n, 10.0, 1.0, 0.01).unwrap();
        let part = match make_partition(sys.mesh(), d, b, Layout::Blocks1D) {
            Ok(p) => p,
            Err(LemError::BufferTooWide { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let mut owner = vec![usize::MAX; n];
        for i in 0..part.count() {
            for g in part.interior(i).iter() {
                prop_assert_eq!(owner[g], usize::MAX);
                owner[g] = i;
            }
            prop_assert!(part.interior(i).is_disjoint(part.buffer(i)));
            prop_assert_eq!(part.local(i), &part.interior(i).union(part.buffer(i)));
            prop_assert_eq!(part.buffer(i).len(), if d == 1 { 0 } else { 2 * b });
        }
        prop_assert!(owner.iter().all(|&o| o != usize::MAX));
        prop_assert_eq!(part.dof_updates_per_step(), n + 2 * b * if d == 1 { 0 } else { d });

        // Gather keeps interior values and discards buffers.
        let u: Vec<f64> = (0..n).map(|g| g as f64).collect();
        let locals: Vec<Vec<f64>> = (0..part.count())
            .map(|i| part.local(i).iter().map(|g| if part.interior(i).contains(g) { u[g] } else { -1.0 }).collect())
            .collect();
        let mut out = vec![f64::NAN; n];
        gather_overwrite(&part, &locals, &mut out).unwrap();
        prop_assert_eq!(out, u);
    }

    #[test]
    fn column_partitions_keep_whole_columns(d in 1usize..5, b in 0usize..4) {
        let sys = build_advdiff_2d(20, 6, 1.0, 1.0, 1.0, 0.0).unwrap();
        let part = match make_partition(sys.mesh(), d, b, Layout::Columns2D) {
            Ok(p) => p,
            Err(LemError::BufferTooWide { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let total: usize = (0..part.count()).map(|i| part.interior(i).len()).sum();
        prop_assert_eq!(total, 120);
        for i in 0..part.count() {
            prop_assert_eq!(part.local(i).len() % 6, 0);
        }
    }
}

#[test]
fn skew_hermitian_exponential_preserves_norm() {
    let sys = build_schrodinger_1d(80, 10.0, 10.0).unwrap();
    let a = sys.linear_matrix().unwrap().scaled(Complex64::new(0.05, 0.0)).to_dense();
    let e = expm_dense(&a).unwrap();
    let v = sys.initial_state();
    let w = e.matvec(&v);
    assert!((norm2(&w) / norm2(&v) - 1.0).abs() <= 1e-10);
}

#[test]
fn krylov_matches_dense_on_advection_diffusion() {
    let sys = build_advdiff_2d(16, 16, 1.0, 1.0, 2.0 * std::f64::consts::PI, 1e-3).unwrap();
    let a = sys.linear_matrix().unwrap();
    let dt = 0.05;
    let scaled = a.scaled(dt).to_dense();
    let tol = 1e-10;
    for k in 1..=3 {
        let phi = phi_k_dense(&scaled, k).unwrap();
        for seed in 0..5 {
            let v: Vec<f64> = (0..256).map(|i| ((i * 37 + seed * 11) as f64).sin()).collect();
            let dense = phi.matvec(&v);
            let kr = phi_action_krylov(a, dt, &v, k, tol, 100).unwrap();
            assert!(kr.converged);
            let diff: Vec<f64> = kr.value.iter().zip(&dense).map(|(p, q)| p - q).collect();
            assert!(norm2(&diff) <= 10.0 * tol * norm2(&dense), "k = {k}");
        }
    }
}
