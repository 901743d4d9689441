//! Exact and conservative reductions checked by sampled containment.

mod common;

use common::*;
use etope::reduce::{
    constrained_to_basic, eliminate_constraint, identify_components, lift_then_reduce, mvoe_pair,
    pop_generator, reduce_2etope, reduce_basic_2, reduce_pop_box, select_pair_heuristic, zonotope_mvoe,
    PopEnclosure,
};
use etope::solve::{contains_point, is_empty};
use etope::{Ellipsoid, Etope, IndexSet, PNorm, SolverConfig};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

/// Residual at most 1e-8.
fn strict() -> SolverConfig {
    SolverConfig::default().with_tol(1e-16).with_max_iters(200_000)
}

fn assert_inside(e: &Etope, pts: &[DVector<f64>], what: &str) {
    let cfg = strict();
    for x in pts {
        let res = contains_point(e, x, &cfg).unwrap();
        assert_eq!(res.contained(), Some(true), "{what}: {x} (residual {:e})", res.residual);
    }
}

/// A feasible coefficient vector found by the solver at a tight tolerance.
fn witness(e: &Etope) -> DVector<f64> {
    let w = is_empty(e, &strict());
    assert_eq!(w.empty(), Some(false), "set should be nonempty");
    w.beta
}

fn single_block_2(n: usize, m: usize, r: &mut impl Rng) -> Etope {
    Etope::basic(PNorm::two(), uniform_vector(r, n, 1.0), uniform_matrix(r, n, m, 1.0)).unwrap()
}

#[test]
fn basic_reduction_is_exact() {
    let mut r = rng(1);
    for _ in 0..20 {
        let n = r.random_range(2..=5);
        let m = r.random_range(n + 1..=2 * n);
        let e = single_block_2(n, m, &mut r);
        let red = reduce_basic_2(&e).unwrap();
        assert_eq!(red.num_generators(), n);
        let forward: Vec<_> = (0..25).map(|_| sample_point(&mut r, &e)).collect();
        assert_inside(&red, &forward, "input point outside the reduction");
        let backward: Vec<_> = (0..25).map(|_| sample_point(&mut r, &red)).collect();
        assert_inside(&e, &backward, "reduced point outside the input");
    }
}

#[test]
fn constrained_to_basic_is_exact() {
    let mut r = rng(2);
    for _ in 0..12 {
        let n = r.random_range(2..=3);
        let k = r.random_range(1..=2);
        let m = r.random_range(n + k + 1..=n + k + 3);
        let base = single_block_2(n, m, &mut r);
        let scale = r.random_range(0.2..0.9);
        let (e, beta) = constrain(&mut r, &base, k, scale);
        let basic = constrained_to_basic(&e).unwrap();
        assert_eq!(basic.num_constraints(), 0);
        assert_inside(&basic, &points_of(&mut r, &e, &beta, 40), "slice point outside the basic set");
        let back: Vec<_> = (0..40).map(|_| sample_point(&mut r, &basic)).collect();
        assert_inside(&e, &back, "basic point outside the slice");
    }
}

#[test]
fn lift_then_reduce_is_exact_and_bounded() {
    let mut r = rng(3);
    for trial in 0..10 {
        let n = 2;
        let k = r.random_range(0..=1);
        let m = r.random_range(6..=10);
        let c = uniform_vector(&mut r, n, 1.0);
        let g = uniform_matrix(&mut r, n, m, 1.0);
        let blocks = IndexSet::new(random_partition(&mut r, m, 6), m).unwrap();
        let base = Etope::new(PNorm::two(), c, g, DMatrix::zeros(0, m), DVector::zeros(0), blocks).unwrap();
        let (e, beta) = constrain(&mut r, &base, k, 0.6);
        let red = lift_then_reduce(&e).unwrap();
        assert!(red.num_generators() <= (n + k) * e.index_set().len(), "trial {trial}");
        assert_inside(&red, &points_of(&mut r, &e, &beta, 30), "input point outside");
        let w = witness(&red);
        assert_inside(&e, &points_of(&mut r, &red, &w, 30), "reduced point outside");
    }
}

#[test]
fn lift_then_reduce_without_constraints_matches_basic_reduction() {
    let mut r = rng(4);
    let e = single_block_2(2, 6, &mut r);
    let a = lift_then_reduce(&e).unwrap();
    let b = reduce_basic_2(&e).unwrap();
    assert_eq!(a.num_generators(), 2);
    assert!((a.generators() - b.generators()).amax() < 1e-9);
}

#[test]
fn mvoe_contains_sampled_sums_and_is_symmetric() {
    let mut r = rng(5);
    for _ in 0..10 {
        let n = r.random_range(2..=6);
        let (q1, q2) = (random_pd(&mut r, n), random_pd(&mut r, n));
        let (c1, c2) = (uniform_vector(&mut r, n, 1.0), uniform_vector(&mut r, n, 1.0));
        let e1 = Ellipsoid::new(c1.clone(), q1.clone()).unwrap();
        let e2 = Ellipsoid::new(c2.clone(), q2.clone()).unwrap();
        let out = mvoe_pair(&e1, &e2).unwrap();
        assert!(out.zeta > 0.0 && out.residual <= 1e-10);
        let sum = out.ellipsoid().unwrap();
        let xs = ellipsoid_points(&mut r, &q1, &c1, 100);
        let ys = ellipsoid_points(&mut r, &q2, &c2, 100);
        for (x, y) in xs.iter().zip(&ys) {
            assert!(sum.level(&(x + y)) <= 1.0 + 1e-9);
        }
        let swapped = mvoe_pair(&e2, &e1).unwrap();
        let rel = (&swapped.q_sum - &out.q_sum).norm() / out.q_sum.norm();
        assert!(rel < 1e-9, "swap changed the shape by {rel}");
        assert!((swapped.zeta * out.zeta - 1.0).abs() < 1e-6);
    }
}

#[test]
fn mvoe_of_equal_shapes_is_a_quarter() {
    let mut r = rng(6);
    for n in 2..=5 {
        let q = random_pd(&mut r, n);
        let e = Ellipsoid::new(DVector::zeros(n), q.clone()).unwrap();
        let out = mvoe_pair(&e, &e).unwrap();
        assert!((out.zeta - 1.0).abs() < 1e-9);
        assert!((&out.q_sum - &q / 4.0).norm() / q.norm() < 1e-9);
    }
}

/// Volume proxy `det(Q)^{-1/2}` from an LU determinant, independent of the
/// library's Cholesky route.
fn volume(q: &DMatrix<f64>) -> f64 {
    1.0 / q.determinant().sqrt()
}

#[test]
fn heuristic_usually_picks_the_smallest_merge() {
    let mut r = rng(7);
    let mut hits = 0;
    for _ in 0..50 {
        let shapes: Vec<Ellipsoid> = (0..4)
            .map(|_| Ellipsoid::new(DVector::zeros(2), random_pd(&mut r, 2)).unwrap())
            .collect();
        let mut best = (0, 0, f64::INFINITY);
        for i in 0..4 {
            for j in i + 1..4 {
                let v = volume(&mvoe_pair(&shapes[i], &shapes[j]).unwrap().q_sum);
                if v < best.2 {
                    best = (i, j, v);
                }
            }
        }
        if select_pair_heuristic(&shapes).unwrap() == (best.0, best.1) {
            hits += 1;
        }
    }
    assert!(hits >= 40, "heuristic matched the exhaustive pair in {hits} of 50 trials");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn heuristic_ignores_uniform_rescaling(seed in any::<u64>(), count in 2usize..6, t in 0.01f64..100.0) {
        let mut r = rng(seed);
        let n = r.random_range(2..=4);
        let shapes: Vec<DMatrix<f64>> = (0..count).map(|_| random_pd(&mut r, n)).collect();
        let make = |s: f64| -> Vec<Ellipsoid> {
            shapes.iter().map(|q| Ellipsoid::new(DVector::zeros(n), q * s).unwrap()).collect()
        };
        prop_assert_eq!(select_pair_heuristic(&make(1.0)).unwrap(), select_pair_heuristic(&make(t)).unwrap());
    }

    #[test]
    fn components_partition_generators_and_rows(seed in any::<u64>(), m in 2usize..9) {
        let mut r = rng(seed);
        let base = random_indexed(&mut r, 2, m, PNorm::two());
        let k = r.random_range(0..=2);
        let (e, _) = constrain(&mut r, &base, k, 0.5);
        let dec = identify_components(&e);
        let mut cols: Vec<usize> = dec.components.iter().flat_map(|c| c.columns.clone()).collect();
        cols.sort_unstable();
        prop_assert_eq!(cols, (0..m).collect::<Vec<_>>());
        let mut rows: Vec<usize> = dec.components.iter().flat_map(|c| c.rows.clone()).collect();
        rows.sort_unstable();
        prop_assert_eq!(rows, (0..k).collect::<Vec<_>>());
        prop_assert_eq!(dec.components.iter().filter(|c| c.has_center).count(), 1);
    }
}

#[test]
fn outer_reductions_contain_their_input() {
    let mut r = rng(8);
    let cfg = SolverConfig::default();
    let check = |outer: &Etope, pts: &[DVector<f64>], what: &str| {
        for x in pts {
            assert_eq!(contains_point(outer, x, &cfg).unwrap().contained(), Some(true), "{what}: {x}");
        }
    };
    for _ in 0..6 {
        let p = random_p(&mut r);
        let e = random_indexed(&mut r, 2, 6, p);
        let pts: Vec<_> = (0..60).map(|_| sample_point(&mut r, &e)).collect();
        if let Some(j) = e.index_set().blocks().iter().find(|b| b.len() > 1).map(|b| b[0]) {
            check(&pop_generator(&e, j).unwrap(), &pts, "popped");
        }
        check(&reduce_pop_box(&e, 2, PopEnclosure::Box).unwrap(), &pts, "pop-box");
        let zono = Etope::from_zonotope(e.center().clone(), e.generators().clone()).unwrap();
        let zpts: Vec<_> = (0..60).map(|_| sample_point(&mut r, &zono)).collect();
        let ell = zonotope_mvoe(zono.center(), zono.generators()).unwrap();
        for x in &zpts {
            assert!(ell.level(x) <= 1.0 + 1e-9, "zonotope point outside its ellipsoid");
        }
        let two = e.with_norm(PNorm::two()).ok().filter(|_| e.index_set().is_singletons());
        if let Some(two) = two {
            check(&reduce_pop_box(&two, 2, PopEnclosure::Ellipsoid).unwrap(), &pts, "pop-ellipsoid");
        }
    }
    for _ in 0..6 {
        let base = random_indexed(&mut r, 2, 6, PNorm::two());
        let (e, beta) = constrain(&mut r, &base, 2, 0.7);
        let pts = points_of(&mut r, &e, &beta, 60);
        check(&eliminate_constraint(&e, 1).unwrap(), &pts, "eliminated");
    }
}

#[test]
fn component_merging_contains_sampled_sums() {
    let mut r = rng(9);
    let cfg = SolverConfig::default();
    for _ in 0..4 {
        // six 2-D balls of random shape, one block each
        let m = 12;
        let blocks: Vec<Vec<usize>> = (0..6).map(|i| vec![2 * i, 2 * i + 1]).collect();
        let e = Etope::new(
            PNorm::two(),
            uniform_vector(&mut r, 2, 1.0),
            uniform_matrix(&mut r, 2, m, 1.0),
            DMatrix::zeros(0, m),
            DVector::zeros(0),
            IndexSet::new(blocks, m).unwrap(),
        )
        .unwrap();
        for target in [1, 3] {
            let red = reduce_2etope(&e, target).unwrap();
            assert!(red.index_set().len() <= target);
            for _ in 0..125 {
                let x = sample_point(&mut r, &e);
                assert_eq!(contains_point(&red, &x, &cfg).unwrap().contained(), Some(true), "target {target}");
            }
        }
        assert_eq!(reduce_2etope(&e, 6).unwrap(), e);
    }
}
