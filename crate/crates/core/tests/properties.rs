//! Randomized property suites over the lattice, operator and certifier
//! layers. Each deterministic suite runs at least 1000 cases from a fixed
//! seed; the proptest blocks cover the algebraic identities with shrinking.

mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;

use common::{random_simplex_point, random_stochastic, random_vector, rng};
use semigroup_lab::vector::NormKind;
use semigroup_lab::{Functional, LatticeVector, PositiveOperator, WeightedSpace};

const CASES: usize = 1000;

fn random_space(r: &mut rand_chacha::ChaCha8Rng, dim: usize) -> Arc<WeightedSpace> {
    let weights: Vec<f64> = (0..dim).map(|_| r.gen_range(0.1..4.0)).collect();
    WeightedSpace::new(weights, 1.0).unwrap()
}

#[test]
fn decompose_reassembles_exactly() {
    let mut r = rng(11);
    for _ in 0..CASES {
        let dim = r.gen_range(1..24);
        let space = random_space(&mut r, dim);
        let f = random_vector(&mut r, &space, -5.0, 5.0);
        let (pos, neg) = f.decompose();
        assert!(pos.is_nonnegative() && neg.is_nonnegative());
        assert_eq!(pos.sub(&neg).unwrap(), f, "pos - neg must equal f exactly");
        assert!(pos.meet(&neg).unwrap().is_zero());
    }
}

#[test]
fn al_norm_additivity_on_positive_cone() {
    let mut r = rng(13);
    for _ in 0..CASES {
        let dim = r.gen_range(1..40);
        let space = random_space(&mut r, dim);
        let f = random_vector(&mut r, &space, 0.0, 3.0);
        let g = random_vector(&mut r, &space, 0.0, 3.0);
        let lhs = f.add(&g).unwrap().al_norm();
        let rhs = f.al_norm() + g.al_norm();
        let budget = 4.0 * dim as f64 * f64::EPSILON * rhs.max(1.0);
        assert!(
            (lhs - rhs).abs() <= budget,
            "additivity violated: {lhs} vs {rhs}"
        );
    }
}

#[test]
fn join_meet_inequality_from_the_maximal_bound_argument() {
    // (a - x v y)^- <= (a - x)^- + (a - y)^- coordinatewise.
    let mut r = rng(17);
    for _ in 0..CASES {
        let dim = r.gen_range(1..16);
        let space = random_space(&mut r, dim);
        let a = random_vector(&mut r, &space, -3.0, 3.0);
        let x = random_vector(&mut r, &space, -3.0, 3.0);
        let y = random_vector(&mut r, &space, -3.0, 3.0);
        let join = x.join(&y).unwrap();
        let (_, lhs) = a.sub(&join).unwrap().decompose();
        let (_, nx) = a.sub(&x).unwrap().decompose();
        let (_, ny) = a.sub(&y).unwrap().decompose();
        let rhs = nx.add(&ny).unwrap();
        assert!(lhs.le(&rhs), "lemma inequality violated");
    }
}

#[test]
fn equal_norm_forces_positive_part_below_negative_part() {
    // For ||f||_1 = ||h||_1: ||(f-h)^+|| <= ||(f-h)^-||, hence
    // ||f - h|| <= 2 deficiency(f, h).
    let mut r = rng(19);
    for _ in 0..CASES {
        let dim = r.gen_range(1..24);
        let space = random_space(&mut r, dim);
        let f = random_simplex_point(&mut r, &space);
        let h = random_simplex_point(&mut r, &space);
        let (pos, neg) = f.sub(&h).unwrap().decompose();
        let slack = 1e-12;
        assert!(pos.al_norm() <= neg.al_norm() + slack);
        let deficiency = f.deficiency(&h, &NormKind::Al).unwrap();
        assert!(f.sub(&h).unwrap().al_norm() <= 2.0 * deficiency + slack);
    }
}

#[test]
fn duality_of_adjoint_across_kernel_types() {
    // <T' phi, f> = <phi, T f> to 1e-12 relative, for every kernel shape.
    let mut r = rng(23);
    let mut cases = 0usize;
    while cases < CASES {
        let dim = r.gen_range(2..16);
        let space = random_space(&mut r, dim);
        let ops = kernel_zoo(&mut r, &space);
        for t in &ops {
            let f = random_vector(&mut r, &space, -2.0, 2.0);
            let phi = Functional::new(
                Arc::clone(&space),
                (0..dim).map(|_| r.gen_range(-2.0..2.0)).collect(),
            )
            .unwrap();
            let lhs = t.adjoint_apply(&phi).unwrap().apply(&f).unwrap();
            let rhs = phi.apply(&t.apply(&f).unwrap()).unwrap();
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            assert!(
                (lhs - rhs).abs() <= 1e-12 * scale,
                "duality violated: {lhs} vs {rhs}"
            );
            cases += 1;
        }
    }
}

#[test]
fn positivity_and_modulus_inequality() {
    // T f >= 0 for f >= 0, and |T f| <= T |f| coordinatewise; equality for
    // lattice homomorphisms.
    let mut r = rng(29);
    let mut cases = 0usize;
    while cases < CASES {
        let dim = r.gen_range(2..16);
        let space = random_space(&mut r, dim);
        for t in kernel_zoo(&mut r, &space) {
            let f = random_vector(&mut r, &space, 0.0, 2.0);
            assert!(t.apply(&f).unwrap().is_nonnegative());

            let g = random_vector(&mut r, &space, -2.0, 2.0);
            let t_abs = t.apply(&g.abs()).unwrap();
            let abs_t = t.apply(&g).unwrap().abs();
            assert!(
                abs_t.le(&t_abs),
                "modulus inequality violated for {:?}",
                t.kernel()
            );
            if t.is_lattice_homomorphism() {
                assert!(
                    abs_t.max_abs_diff(&t_abs) == 0.0,
                    "lattice homomorphism must commute with modulus exactly"
                );
            }
            cases += 1;
        }
    }
}

#[test]
fn lattice_homomorphism_modulus_identity_on_transport_kernels() {
    let mut r = rng(31);
    for _ in 0..CASES {
        let dim = r.gen_range(2..20);
        let space = random_space(&mut r, dim);
        // Injective sigma: a permutation gives a genuine lattice homomorphism.
        let mut sigma: Vec<usize> = (0..dim).collect();
        for i in (1..dim).rev() {
            let j = r.gen_range(0..=i);
            sigma.swap(i, j);
        }
        let gains: Vec<f64> = (0..dim).map(|_| r.gen_range(0.0..3.0)).collect();
        let t = PositiveOperator::transport(Arc::clone(&space), sigma, gains).unwrap();
        assert!(t.is_lattice_homomorphism());
        let f = random_vector(&mut r, &space, -4.0, 4.0);
        let lhs = t.apply(&f).unwrap().abs();
        let rhs = t.apply(&f.abs()).unwrap();
        assert_eq!(lhs.max_abs_diff(&rhs), 0.0);
    }
}

#[test]
fn interval_preservation_witness_validity() {
    // Random transport kernel, f <= g, y = T(f + u (g - f)): the witness x
    // satisfies f <= x <= g and T x = y.
    let mut r = rng(37);
    for _ in 0..CASES {
        let dim = 20;
        let space = random_space(&mut r, dim);
        let sigma: Vec<usize> = (0..dim).map(|_| r.gen_range(0..dim)).collect();
        let gains: Vec<f64> = (0..dim).map(|_| r.gen_range(0.1..2.0)).collect();
        let t = PositiveOperator::transport(Arc::clone(&space), sigma, gains).unwrap();
        let f = random_vector(&mut r, &space, 0.0, 1.0);
        let g = f.add(&random_vector(&mut r, &space, 0.0, 1.5)).unwrap();
        let u = random_vector(&mut r, &space, 0.0, 1.0);
        let target_arg = LatticeVector::new(
            Arc::clone(&space),
            f.entries()
                .iter()
                .zip(g.entries())
                .zip(u.entries())
                .map(|((a, b), s)| a + s * (b - a))
                .collect(),
        )
        .unwrap();
        let y = t.apply(&target_arg).unwrap();
        let x = t.interval_preservation_witness(&f, &g, &y).unwrap();
        assert!(f.le(&x) && x.le(&g), "witness must stay inside [f, g]");
        let image = t.apply(&x).unwrap();
        let scale = 1.0 + y.entries().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(
            image.max_abs_diff(&y) <= 1e-12 * scale,
            "witness image misses the target"
        );
    }
}

#[test]
fn vertex_reduction_never_under_reports_the_sup() {
    // deficiency(T f, h) <= max_j deficiency(T e_j / ||e_j||, h) + 1e-12
    // over random Markov operators, random simplex points and random bounds.
    let mut r = rng(41);
    let mut cases = 0usize;
    while cases < CASES {
        let dim = r.gen_range(2..12);
        let space = WeightedSpace::unit(dim);
        let m = random_stochastic(&mut r, dim);
        let t = PositiveOperator::dense(Arc::clone(&space), m).unwrap();
        let h = random_vector(&mut r, &space, 0.0, 0.6);
        let mut vertex_sup = 0.0f64;
        for j in 0..dim {
            let e_j = LatticeVector::basis(Arc::clone(&space), j);
            let v_j = e_j.scale(1.0 / e_j.al_norm());
            vertex_sup = vertex_sup.max(
                t.apply(&v_j)
                    .unwrap()
                    .deficiency(&h, &NormKind::Al)
                    .unwrap(),
            );
        }
        for _ in 0..10 {
            let f = random_simplex_point(&mut r, &space);
            let d = t.apply(&f).unwrap().deficiency(&h, &NormKind::Al).unwrap();
            assert!(
                d <= vertex_sup + 1e-12,
                "interior point beat the vertices: {d} > {vertex_sup}"
            );
            cases += 1;
        }
    }
}

#[test]
fn fp_operators_are_markov_with_koopman_adjoints_for_every_map() {
    // Frobenius-Perron operators of random finite maps over random weights:
    // always Markov at 1e-12 and the structural gate for the Ding-style
    // certifier is always open.
    let mut r = rng(47);
    for _ in 0..CASES {
        let dim = r.gen_range(2..24);
        let space = random_space(&mut r, dim);
        let sigma: Vec<usize> = (0..dim).map(|_| r.gen_range(0..dim)).collect();
        let map = semigroup_lab::fp::FiniteMap::new(sigma, Arc::clone(&space)).unwrap();
        let t = semigroup_lab::fp::fp_of_finite_map(&map);
        assert!(t.is_markov(1e-12));
        assert!(t.adjoint_is_lattice_homomorphism());
    }
}

#[test]
fn value_types_are_shareable_across_threads() {
    // Immutable value semantics: everything is Send + Sync, so vertex sweeps
    // may fan out over threads without synchronization.
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<WeightedSpace>();
    assert_send_sync::<LatticeVector>();
    assert_send_sync::<Functional>();
    assert_send_sync::<PositiveOperator>();
    assert_send_sync::<semigroup_lab::Semigroup>();

    // And a parallel vertex sweep agrees with the sequential one.
    let mut r = rng(53);
    let space = WeightedSpace::unit(12);
    let t = Arc::new(
        PositiveOperator::dense(Arc::clone(&space), {
            let mut m = semigroup_lab::DenseMatrix::zeros(12);
            for i in 0..12 {
                for j in 0..12 {
                    m[(i, j)] = r.gen_range(0.0..1.0);
                }
            }
            m
        })
        .unwrap(),
    );
    let sequential: Vec<f64> = (0..12)
        .map(|j| {
            t.apply(&LatticeVector::basis(Arc::clone(&space), j))
                .unwrap()
                .al_norm()
        })
        .collect();
    let parallel: Vec<f64> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..12)
            .map(|j| {
                let t = Arc::clone(&t);
                let space = Arc::clone(&space);
                scope.spawn(move || {
                    t.apply(&LatticeVector::basis(space, j)).unwrap().al_norm()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(sequential, parallel);
}

#[test]
fn composition_norm_is_submultiplicative() {
    let mut r = rng(43);
    for _ in 0..200 {
        let dim = r.gen_range(2..10);
        let space = random_space(&mut r, dim);
        let zoo = kernel_zoo(&mut r, &space);
        let a = zoo[r.gen_range(0..zoo.len())].clone();
        let b = zoo[r.gen_range(0..zoo.len())].clone();
        let ab = PositiveOperator::compose(vec![a.clone(), b.clone()]).unwrap();
        let na = a.weighted_operator_norm().unwrap();
        let nb = b.weighted_operator_norm().unwrap();
        let nab = ab.weighted_operator_norm().unwrap();
        assert!(nab <= na * nb * (1.0 + 1e-12) + 1e-300);
    }
}

/// One operator of every kernel shape over the given space.
fn kernel_zoo(
    r: &mut rand_chacha::ChaCha8Rng,
    space: &Arc<WeightedSpace>,
) -> Vec<PositiveOperator> {
    let dim = space.dim();
    let mut dense = semigroup_lab::DenseMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            dense[(i, j)] = r.gen_range(0.0..1.0);
        }
    }
    let triplets: Vec<(usize, usize, f64)> = (0..2 * dim)
        .map(|_| {
            (
                r.gen_range(0..dim),
                r.gen_range(0..dim),
                r.gen_range(0.0..1.5),
            )
        })
        .collect();
    let phi = Functional::new(
        Arc::clone(space),
        (0..dim).map(|_| r.gen_range(0.0..1.0)).collect(),
    )
    .unwrap();
    let vec = random_vector(r, space, 0.0, 1.0);
    let sigma: Vec<usize> = (0..dim).map(|_| r.gen_range(0..dim)).collect();
    let gains: Vec<f64> = (0..dim).map(|_| r.gen_range(0.0..2.0)).collect();
    let dense_op = PositiveOperator::dense(Arc::clone(space), dense).unwrap();
    let sparse_op = PositiveOperator::sparse(Arc::clone(space), triplets).unwrap();
    let rank_one = PositiveOperator::rank_one(phi, vec).unwrap();
    let shift = PositiveOperator::right_shift(Arc::clone(space));
    let diag = PositiveOperator::diagonal(
        Arc::clone(space),
        (0..dim).map(|_| r.gen_range(0.0..2.0)).collect(),
    )
    .unwrap();
    let transport = PositiveOperator::transport(Arc::clone(space), sigma, gains).unwrap();
    let sum = PositiveOperator::sum(vec![rank_one.clone(), diag.clone()]).unwrap();
    let compose = PositiveOperator::compose(vec![shift.clone(), sparse_op.clone()]).unwrap();
    vec![
        dense_op, sparse_op, rank_one, shift, diag, transport, sum, compose,
    ]
}

proptest! {
    #[test]
    fn lattice_absorption_and_distributivity(
        raw_f in prop::collection::vec(-100i32..100, 1..12),
        raw_g in prop::collection::vec(-100i32..100, 1..12),
        raw_k in prop::collection::vec(-100i32..100, 1..12),
    ) {
        // Exactly representable inputs: the identities hold exactly in floats.
        let dim = raw_f.len().min(raw_g.len()).min(raw_k.len());
        let space = WeightedSpace::unit(dim);
        let to_vec = |raw: &[i32]| {
            LatticeVector::new(
                Arc::clone(&space),
                raw.iter().take(dim).map(|&x| x as f64).collect(),
            )
            .unwrap()
        };
        let f = to_vec(&raw_f);
        let g = to_vec(&raw_g);
        let k = to_vec(&raw_k);
        // absorption
        prop_assert_eq!(f.join(&f.meet(&g).unwrap()).unwrap(), f.clone());
        prop_assert_eq!(f.meet(&f.join(&g).unwrap()).unwrap(), f.clone());
        // distributivity of the coordinatewise lattice
        let lhs = f.meet(&g.join(&k).unwrap()).unwrap();
        let rhs = f.meet(&g).unwrap().join(&f.meet(&k).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn deficiency_zero_iff_dominating(
        raw_f in prop::collection::vec(0u32..50, 1..10),
        raw_h in prop::collection::vec(0u32..50, 1..10),
    ) {
        let dim = raw_f.len().min(raw_h.len());
        let space = WeightedSpace::unit(dim);
        let f = LatticeVector::new(
            Arc::clone(&space),
            raw_f.iter().take(dim).map(|&x| x as f64).collect(),
        ).unwrap();
        let h = LatticeVector::new(
            Arc::clone(&space),
            raw_h.iter().take(dim).map(|&x| x as f64).collect(),
        ).unwrap();
        let d = f.deficiency(&h, &NormKind::Al).unwrap();
        prop_assert_eq!(d == 0.0, h.le(&f));
    }
}
