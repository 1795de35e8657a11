//! Certifier-level integration tests: the convergence theorems exercised on
//! the gallery and on randomized fixtures, against independent oracles.

mod common;

use std::sync::Arc;

use common::{
    block_diagonal_stochastic, discrete_semigroup, perron_oracle, random_stochastic, rng,
};
use semigroup_lab::bounds::{
    ding_certify, domination_transfer, individual_bounds_certify, lasota_yorke_certify,
    lattice_homo_rigidity, maximal_lower_bound_estimate, psi_lower_bound_certify,
    uniform_lower_bound_check, CheckMode, Conclusion, DEFAULT_POSITIVITY_FLOOR,
};
use semigroup_lab::convergence::{
    detect_strong_convergence, embedded_discrete_consistency, operator_norm_convergence,
    projection_constancy_defect,
};
use semigroup_lab::exact::shift_feedback_limit;
use semigroup_lab::gallery;
use semigroup_lab::numeric::DenseMatrix;
use semigroup_lab::{Functional, LatticeVector, PositiveOperator, Semigroup, WeightedSpace};

#[test]
fn lasota_yorke_matches_perron_oracle() {
    let mut r = rng(101);
    for case in 0..6 {
        let dim = 4 + case * 7;
        let space = WeightedSpace::unit(dim);
        let m = random_stochastic(&mut r, dim);
        let pi = perron_oracle(&m, space.weights());
        let s = discrete_semigroup(Arc::clone(&space), m);
        let out = lasota_yorke_certify(&s, &pi.scale(0.5), 200, 1e-10).unwrap();
        assert_eq!(out.certifier.conclusion, Conclusion::Certified, "case {case}");
        // Limit columns all equal the stationary density.
        let p = out.predicted_limit.unwrap();
        for j in 0..dim {
            let col = LatticeVector::new(Arc::clone(&space), p.column(j)).unwrap();
            assert!(
                col.sub(&pi).unwrap().al_norm() <= 1e-10,
                "column {j} misses the oracle"
            );
        }
        assert!((out.fixed_vector.unwrap().al_norm() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn maximal_bound_matches_perron_oracle() {
    let mut r = rng(103);
    let dim = 9;
    let space = WeightedSpace::unit(dim);
    let m = random_stochastic(&mut r, dim);
    let pi = perron_oracle(&m, space.weights());
    let s = discrete_semigroup(Arc::clone(&space), m);
    let f = LatticeVector::basis(Arc::clone(&space), 2);
    let out = maximal_lower_bound_estimate(&s, &f, 200, 1e-10).unwrap();
    assert!(out.fixed_point);
    assert!(
        out.report.bound.sub(&pi).unwrap().al_norm() <= 1e-8,
        "maximal bound must converge to the stationary density"
    );
}

#[test]
fn shift_feedback_has_individual_floors_but_no_uniform_bound() {
    let g = gallery::build_shift_feedback(48).unwrap();
    let s = &g.semigroup;
    let space = s.space().clone();
    let horizon = gallery::max_exact_horizon(48).min(40);

    // Individual: T^n f >= <h, f> e_0, so c_f e_0 is a certified bound.
    let e1 = LatticeVector::basis(Arc::clone(&space), 1);
    let r = semigroup_lab::bounds::individual_lower_bound_estimate(s, &e1, horizon, 0.95, 1e-9)
        .unwrap();
    assert!(r.certified);
    assert!(
        r.bound.get(0) >= 0.95 * 0.5,
        "bound at e_0 must dominate 0.95 (1 - c_1) = 0.475, got {}",
        r.bound.get(0)
    );

    // Uniform: any bound of positive norm fails on deep vertices.
    let h = LatticeVector::basis(Arc::clone(&space), 0).scale(0.05);
    let u = uniform_lower_bound_check(s, &h, horizon, 1e-9, CheckMode::Uniform).unwrap();
    assert!(!u.certified, "no nonzero uniform lower bound exists");

    // And convergence indeed fails.
    let c = detect_strong_convergence(s, horizon, 1e-9).unwrap();
    assert!(!c.converged);
}

#[test]
fn shift_feedback_maximal_bound_hits_the_product_limit() {
    let g = gallery::build_shift_feedback(64).unwrap();
    let space = g.semigroup.space().clone();
    let e1 = LatticeVector::basis(Arc::clone(&space), 1);
    let out = maximal_lower_bound_estimate(&g.semigroup, &e1, 50, 1e-10).unwrap();
    // The maximal fixed bound for the orbit of e_1 is (1 - c) e_0 where
    // c = lim prod(1 - 2^-k); evaluated by the independent product oracle.
    let c = shift_feedback_limit(1e-12);
    assert!(out.fixed_point);
    assert!(
        (out.report.bound.get(0) - (1.0 - c)).abs() <= 1e-5,
        "expected e_0 coefficient {} got {}",
        1.0 - c,
        out.report.bound.get(0)
    );
    for j in 1..64 {
        assert!(out.report.bound.get(j).abs() <= 1e-9);
    }
}

#[test]
fn individual_bounds_two_sided_on_block_suite() {
    let mut r = rng(107);
    for blocks in [vec![3, 4], vec![3, 4, 5], vec![2, 3, 4, 5]] {
        let n: usize = blocks.iter().sum();
        let space = WeightedSpace::unit(n);
        let m = block_diagonal_stochastic(&mut r, &blocks);
        // epsilon = min stationary entry over all blocks (diagonal blocks are
        // stochastic, so the global stationary mass in each block column is 1).
        let mut eps = f64::INFINITY;
        {
            let mut offset = 0;
            for &b in &blocks {
                let mut blk = DenseMatrix::zeros(b);
                for i in 0..b {
                    for j in 0..b {
                        blk[(i, j)] = m[(offset + i, offset + j)];
                    }
                }
                let pi = perron_oracle(&blk, &vec![1.0; b]);
                eps = eps.min(pi.entries().iter().fold(f64::INFINITY, |a, &x| a.min(x)));
                offset += b;
            }
        }
        let s = discrete_semigroup(Arc::clone(&space), m);
        let out = individual_bounds_certify(&s, eps, 260, 1e-9).unwrap();
        assert!(out.hypothesis_holds, "blocks {blocks:?}");
        assert_eq!(out.forward, Conclusion::Certified);
        assert_eq!(out.backward, Conclusion::Certified);
        assert_eq!(
            out.rank_estimate,
            Some(blocks.len()),
            "limit rank equals the number of blocks"
        );
    }
}

#[test]
fn shift_feedback_epsilon_floor_fails_and_convergence_fails() {
    // Vertex bounds exist but their norms decay to zero with the vertex
    // index, so the hypothesis fails for every fixed epsilon; and the
    // conclusion (convergence) fails too: the theorem is never violated.
    for dim in [16usize, 32, 64] {
        let g = gallery::build_shift_feedback(dim).unwrap();
        let horizon = gallery::max_exact_horizon(dim);
        let out = individual_bounds_certify(&g.semigroup, 1e-3, horizon, 1e-9).unwrap();
        assert!(!out.hypothesis_holds, "dim {dim}");
        assert_eq!(out.forward, Conclusion::NotApplicable);
        assert_ne!(out.certifier.conclusion, Conclusion::Violated);
        assert!(!out.converged);
        // The floor shrinks as the dimension grows.
        let deep_vertex_norm = out.vertices[dim - 2].raw_norm;
        assert!(deep_vertex_norm <= 2.0f64.powi(-(dim as i32) + 3));
    }
}

#[test]
fn domination_transfer_on_perturbed_chain() {
    let mut r = rng(109);
    let dim = 6;
    let space = WeightedSpace::unit(dim);
    let m = random_stochastic(&mut r, dim);
    let pi = perron_oracle(&m, space.weights());
    let sub = discrete_semigroup(Arc::clone(&space), m.clone());

    // S = (1 - d) T + d (1 ⊗ pi) dominates T asymptotically: both converge
    // to 1 ⊗ pi, so (S_t - T_t) f -> 0.
    let delta = 0.1;
    let mut rank_one = DenseMatrix::zeros(dim);
    for j in 0..dim {
        for i in 0..dim {
            rank_one[(i, j)] = pi.get(i);
        }
    }
    let dom_matrix = m.scale(1.0 - delta).add(&rank_one.scale(delta));
    let dom = discrete_semigroup(Arc::clone(&space), dom_matrix);
    let out = domination_transfer(&dom, &sub, 220, 1e-8).unwrap();
    assert!(out.domination_certified);
    assert_eq!(out.certifier.conclusion, Conclusion::Certified);
    assert_eq!(out.dom_converged, Some(true));

    // Self-domination is trivial and reduces to self-consistency.
    let self_out = domination_transfer(&sub, &sub, 220, 1e-8).unwrap();
    assert!(self_out.domination_certified);
    assert_eq!(self_out.certifier.conclusion, Conclusion::Certified);
}

#[test]
fn domination_declines_without_a_column_floor() {
    // Dominated semigroup = an idempotent rank-one map whose pairing kills
    // one basis direction: the limit has a zero column, the epsilon floor
    // fails and the transfer must decline, not predict.
    let dim = 24;
    let space = WeightedSpace::unit(dim);
    let mut coeffs: Vec<f64> = (0..dim).map(|k| 0.5f64.powi(k as i32)).collect();
    coeffs[2] = 0.0;
    let t = PositiveOperator::rank_one(
        Functional::new(Arc::clone(&space), coeffs).unwrap(),
        LatticeVector::basis(Arc::clone(&space), 0),
    )
    .unwrap();
    let s = Semigroup::discrete(t);
    let out = domination_transfer(&s, &s, 40, 1e-12).unwrap();
    assert!(out.domination_certified);
    assert!(out.sub_converged);
    assert_eq!(out.sub_min_ratio, Some(0.0), "the killed direction has a zero limit column");
    assert_eq!(out.certifier.conclusion, Conclusion::NotApplicable);
}

#[test]
fn ding_on_collapse_chain_and_rank_one_projection() {
    let s = gallery::build_collapse_chain(100).unwrap();
    let out = ding_certify(&s, 220, 1e-10, DEFAULT_POSITIVITY_FLOOR).unwrap();
    assert_eq!(out.certifier.conclusion, Conclusion::Certified);
    let p = out.limit.as_ref().unwrap();
    for j in 0..100 {
        assert!((p[(1, j)] - 1.0).abs() <= 1e-12, "limit must be 1 ⊗ e_1");
    }
    assert!(out.min_column_norm.unwrap() > 0.0);

    // The rank-one projection certifies with P = T; its column norms decay
    // 2^{-k} yet each stays strictly positive, so the floor must be passed
    // below the deepest column.
    let g = gallery::build_rank_one_projection(40).unwrap();
    let floor = 2.0f64.powi(-41);
    let out = ding_certify(&g.semigroup, 60, 1e-10, floor).unwrap();
    assert_eq!(out.certifier.conclusion, Conclusion::Certified);
    let p = out.limit.as_ref().unwrap();
    let t = g.operator.to_dense().unwrap();
    assert!(p.sub(&t).max_abs() <= 1e-15, "limit equals the projection itself");
    for k in 0..40 {
        let norm: f64 = p.column(k).iter().map(|x| x.abs()).sum();
        assert!((norm - 2.0f64.powi(-(k as i32))).abs() <= 1e-12);
    }
}

#[test]
fn rigidity_identity_cycle_decay_consistency() {
    let space = WeightedSpace::unit(6);
    let id = Semigroup::discrete(PositiveOperator::identity(Arc::clone(&space)));
    let out = lattice_homo_rigidity(&id, 60, 1e-10).unwrap();
    assert_eq!(out.forward, Conclusion::Certified);
    assert_eq!(out.backward, Conclusion::Certified);

    let two_cycle = Semigroup::discrete(
        PositiveOperator::transport(Arc::clone(&space), vec![1, 0, 3, 2, 5, 4], vec![1.0; 6])
            .unwrap(),
    );
    let out = lattice_homo_rigidity(&two_cycle, 60, 1e-10).unwrap();
    assert!(!out.hypothesis_holds && !out.is_identity);
    assert_eq!(out.certifier.conclusion, Conclusion::NotApplicable);

    let decay = Semigroup::discrete(
        PositiveOperator::diagonal(Arc::clone(&space), vec![1.0, 0.8, 1.0, 0.6, 1.0, 0.95])
            .unwrap(),
    );
    let out = lattice_homo_rigidity(&decay, 120, 1e-10).unwrap();
    assert!(!out.hypothesis_holds && !out.is_identity);
    assert_eq!(out.certifier.conclusion, Conclusion::NotApplicable);
}

#[test]
fn psi_certifier_flags_missing_f0_on_weighted_shift() {
    // The weighted shift admits psi-bounds (psi is fixed under the adjoint)
    // but no order-bounding f0 exists; native convergence fails; the report
    // must decline rather than predict.
    let g = gallery::build_weighted_shift(80, 2.0).unwrap();
    let space = g.native.space().clone();
    let h = LatticeVector::basis(Arc::clone(&space), 0);
    let out = psi_lower_bound_certify(&g.native, &h, &g.psi, None, 60, 1e-9).unwrap();
    assert!((out.m_for_psi - 1.0).abs() <= 1e-9, "psi is a fixed functional");
    assert!(!out.f0_supplied);
    assert_eq!(out.certifier.conclusion, Conclusion::NotApplicable);

    // And the native l^p diagnostic indeed reports non-convergence.
    let verdict = semigroup_lab::convergence::orbit_convergence(
        &g.native,
        &LatticeVector::basis(space, 1),
        60,
        1e-9,
    )
    .unwrap();
    assert!(!verdict.converged);
    assert!(verdict.tail_residual >= 0.9);
}

#[test]
fn psi_certifier_rejects_non_strictly_positive_psi() {
    let g = gallery::build_weighted_shift(32, 2.0).unwrap();
    let space = g.native.space().clone();
    let mut coeffs = vec![1.0; 32];
    coeffs[7] = 0.0;
    let psi = Functional::new(Arc::clone(&space), coeffs).unwrap();
    let h = LatticeVector::basis(space, 0);
    assert!(psi_lower_bound_certify(&g.native, &h, &psi, None, 30, 1e-9).is_err());
}

#[test]
fn two_point_collapse_is_norm_convergent_but_not_identity() {
    let (s, op) = gallery::build_two_point_collapse().unwrap();
    let r = operator_norm_convergence(&s, 40, 1e-12).unwrap();
    assert!(r.converged);
    let p = r.limit.unwrap();
    assert!(p.sub(&op.to_dense().unwrap()).max_abs() == 0.0);
    let id = DenseMatrix::identity(2);
    assert!(p.sub(&id).max_abs() > 0.5, "limit differs from the identity");
    assert!(!semigroup_lab::fp::is_measure_preserving(&op, 1e-12));
}

#[test]
fn doubling_ulam_norm_distance_closed_form() {
    // ||T^n - P||_1 = 2 (1 - 2^{n-k}) for n <= k on 2^k cells, exactly.
    let k = 6;
    let cells = 1usize << k;
    let u = gallery::build_doubling_ulam(cells).unwrap();
    assert!(u.exact_markov_partition);
    let weights = u.operator.space().weights().to_vec();
    let t = u.operator.to_dense().unwrap();
    // Limit: column j is the uniform density carrying the mass of e_j,
    // i.e. 1/cells in density coordinates.
    let mut p = DenseMatrix::zeros(cells);
    for j in 0..cells {
        for i in 0..cells {
            p[(i, j)] = 1.0 / cells as f64;
        }
    }
    let mut m = DenseMatrix::identity(cells);
    for n in 0..=k {
        let expected = 2.0 * (1.0 - 2.0f64.powi(n as i32 - k as i32));
        let got = m.sub(&p).weighted_operator_norm(&weights);
        assert!(
            (got - expected).abs() <= 1e-12,
            "n = {n}: got {got}, expected {expected}"
        );
        m = t.matmul(&m);
    }
}

#[test]
fn corollary_suite_no_measure_preserving_norm_convergent_non_identity() {
    // Measure-preserving FP instances: cyclic permutations and the identity.
    // Within the trustworthy horizon none of them is norm convergent except
    // the identity; the two-point instance converges but is not measure
    // preserving. The suite therefore contains no counterexample to the
    // rigidity corollary.
    struct Case {
        semigroup: Semigroup,
        operator: PositiveOperator,
        horizon: usize,
    }
    let mut cases = Vec::new();
    for n in [3usize, 5, 8] {
        let s = gallery::build_cyclic_permutation(n).unwrap();
        let op = s.generator().unwrap().clone();
        cases.push(Case {
            semigroup: s,
            operator: op,
            horizon: 50,
        });
    }
    {
        let s = gallery::build_identity(6).unwrap();
        let op = s.generator().unwrap().clone();
        cases.push(Case {
            semigroup: s,
            operator: op,
            horizon: 50,
        });
    }
    {
        let (s, op) = gallery::build_two_point_collapse().unwrap();
        cases.push(Case {
            semigroup: s,
            operator: op,
            horizon: 50,
        });
    }
    {
        let u = gallery::build_doubling_ulam(64).unwrap();
        let horizon = gallery::ulam_resolution_horizon(2.0, 64) - 1;
        cases.push(Case {
            semigroup: Semigroup::discrete(u.operator.clone()),
            operator: u.operator,
            horizon,
        });
    }

    for (i, case) in cases.iter().enumerate() {
        let preserving = semigroup_lab::fp::is_measure_preserving(&case.operator, 1e-12);
        let report = operator_norm_convergence(&case.semigroup, case.horizon, 1e-10).unwrap();
        if preserving && report.converged {
            // Must be the identity (rigidity conclusion).
            let id = DenseMatrix::identity(case.operator.dim());
            let defect = report.limit.as_ref().unwrap().sub(&id).max_abs();
            assert!(defect <= 1e-12, "case {i}: non-identity norm-convergent limit");
        }
    }
}

#[test]
fn quasi_interior_fixed_density_plus_norm_convergence_forces_identity() {
    // FP instances with an everywhere-positive fixed density: on this suite
    // the only norm-convergent one is the identity (checked exactly), the
    // others fail norm convergence, so the corollary holds non-vacuously on
    // the identity and vacuously elsewhere.
    let id = gallery::build_identity(5).unwrap();
    let r = operator_norm_convergence(&id, 30, 1e-12).unwrap();
    assert!(r.converged);
    assert!(r.limit.unwrap().sub(&DenseMatrix::identity(5)).max_abs() == 0.0);

    for n in [4usize, 7] {
        let s = gallery::build_cyclic_permutation(n).unwrap();
        let op = s.generator().unwrap().clone();
        // uniform density is fixed and quasi-interior
        let ones = LatticeVector::ones(op.space().clone());
        assert!(op.apply(&ones).unwrap().max_abs_diff(&ones) == 0.0);
        let r = operator_norm_convergence(&s, 60, 1e-10).unwrap();
        assert!(!r.converged, "cyclic permutation must not norm-converge");
    }
}

#[test]
fn embedded_consistency_on_uniformized_primitive_generator() {
    let mut r = rng(113);
    let dim = 4;
    let space = WeightedSpace::unit(dim);
    let k = random_stochastic(&mut r, dim);
    // Conservative generator Q = K - I.
    let q = k.sub(&DenseMatrix::identity(dim));
    let s = Semigroup::continuous(Arc::clone(&space), q, None).unwrap();
    let report =
        embedded_discrete_consistency(&s, &[0.3, 1.0, std::f64::consts::SQRT_2], 200, 1e-8)
            .unwrap();
    assert!(report.all_embedded_agree, "pairwise defect {}", report.pairwise_defect);
    assert!(report.pairwise_defect <= 1e-8);
    assert!(report.continuous_converged);
    assert!(report.rank_one_prediction);
    assert!(!report.violated);
}

#[test]
fn embedded_consistency_on_rotation_counterexample() {
    let t0 = 1.3;
    let s = gallery::build_rotation(t0).unwrap();
    // Steps: the period itself (embedded constant => converges), the half
    // period (period-2 flip => diverges).
    let report = embedded_discrete_consistency(&s, &[t0 / 2.0, t0], 60, 1e-9).unwrap();
    let half = &report.steps[0];
    let full = &report.steps[1];
    assert!(!half.converged, "half-period embedding is a sign flip");
    assert!(full.converged, "full-period embedding is constant");
    assert_eq!(full.rank_estimate, Some(2));
    assert!(!report.continuous_converged);
    assert!(!report.rank_one_prediction);
    assert!(!report.violated, "pattern is exactly the non-rank-1 exception");
}

#[test]
fn rotation_with_unit_period_does_not_fake_continuous_convergence() {
    // A sampling grid commensurate with the period makes the sampled family
    // constant; the incommensurate cross-grid must catch it.
    let s = gallery::build_rotation(1.0).unwrap();
    let report = embedded_discrete_consistency(&s, &[0.5, 1.0], 60, 1e-9).unwrap();
    assert!(!report.continuous_converged);
    assert!(!report.violated);
    assert!(report
        .notes
        .iter()
        .any(|n| n.contains("incommensurate grid disagreed")));
}

#[test]
fn q_zero_converges_to_identity_in_every_embedding() {
    let space = WeightedSpace::unit(3);
    let s = Semigroup::continuous(Arc::clone(&space), DenseMatrix::zeros(3), None).unwrap();
    let report = embedded_discrete_consistency(&s, &[0.3, 1.0], 30, 1e-12).unwrap();
    assert!(report.all_embedded_agree && report.continuous_converged);
    assert!(!report.violated);
    for v in &report.steps {
        assert_eq!(v.rank_estimate, Some(3));
    }
}

#[test]
fn projection_semigroup_grid_constancy() {
    // Idempotent sampled operators force a constant family.
    let (s, _) = gallery::build_two_point_collapse().unwrap();
    // Discrete constant semigroup: T^n = T for all n.
    let d1 = s.evaluate(1.0).unwrap().to_dense().unwrap();
    let d3 = s.evaluate(3.0).unwrap().to_dense().unwrap();
    assert!(d1.sub(&d3).max_abs() == 0.0);

    let space = WeightedSpace::unit(4);
    let cont = Semigroup::continuous(Arc::clone(&space), DenseMatrix::zeros(4), None).unwrap();
    let defect = projection_constancy_defect(&cont, &[0.4, 1.1, 2.7, 3.3], 1e-12)
        .unwrap()
        .expect("identity family is idempotent");
    assert!(defect <= 3.0 * 1e-12);
}

#[test]
fn markov_preservation_under_uniformization() {
    let mut r = rng(127);
    let dim = 5;
    let space = WeightedSpace::unit(dim);
    let k = random_stochastic(&mut r, dim);
    let q = k.sub(&DenseMatrix::identity(dim));
    let s = Semigroup::continuous(Arc::clone(&space), q, None).unwrap();
    for t in [0.2, 1.0, 3.5, 10.0] {
        assert!(
            s.evaluate(t).unwrap().is_markov(1e-12),
            "conservative Q must give Markov T_t at t = {t}"
        );
    }
}

#[test]
fn converged_verdict_is_stable_under_horizon_doubling() {
    let mut r = rng(131);
    for dim in [3usize, 8, 17] {
        let space = WeightedSpace::unit(dim);
        let m = random_stochastic(&mut r, dim);
        let s = discrete_semigroup(Arc::clone(&space), m);
        let short = detect_strong_convergence(&s, 120, 1e-9).unwrap();
        let long = detect_strong_convergence(&s, 240, 1e-9).unwrap();
        assert!(short.converged);
        assert!(long.converged, "verdict reversed at doubled horizon");
        assert!(long.tail_residual <= short.tail_residual.max(1e-9));
    }
}

#[test]
fn bound_monotonicity_in_the_certified_candidate() {
    // If h <= h' and h' certifies, then h certifies with a trace that is
    // coordinatewise below.
    let mut r = rng(137);
    let dim = 7;
    let space = WeightedSpace::unit(dim);
    let m = random_stochastic(&mut r, dim);
    let pi = perron_oracle(&m, space.weights());
    let s = discrete_semigroup(Arc::clone(&space), m);
    let h_big = pi.scale(0.8);
    let h_small = pi.scale(0.4);
    let big = uniform_lower_bound_check(&s, &h_big, 200, 1e-9, CheckMode::Uniform).unwrap();
    let small = uniform_lower_bound_check(&s, &h_small, 200, 1e-9, CheckMode::Uniform).unwrap();
    assert!(big.certified && small.certified);
    for (a, b) in small.deficiency_trace.iter().zip(&big.deficiency_trace) {
        assert!(a.1 <= b.1 + 1e-15);
    }
}

#[test]
fn lemma_conclusions_for_maximal_bounds_on_markov_semigroups() {
    let mut r = rng(139);
    let dim = 6;
    let space = WeightedSpace::unit(dim);
    let m = random_stochastic(&mut r, dim);
    let s = discrete_semigroup(Arc::clone(&space), m);
    let f = common::random_simplex_point(&mut r, &space);
    let out = maximal_lower_bound_estimate(&s, &f, 200, 1e-10).unwrap();
    // ||h|| <= sup_t ||T_t|| = 1 and T h = h within tolerance.
    assert!(out.report.norm_of_bound <= 1.0 + 1e-9);
    assert!(out.fixed_point);
    let step = s.unit_step().unwrap();
    assert!(
        step.apply(&out.report.bound)
            .unwrap()
            .sub(&out.report.bound)
            .unwrap()
            .al_norm()
            <= 1e-8
    );
}

#[test]
fn lasota_yorke_bounded_mode_on_non_markov_projection() {
    // Idempotent rank-one map with a non-constant fixed functional: bounded
    // but not Markov. The bounded-mode conclusion floors the fixed functional
    // by the bound norm.
    let dim = 5;
    let space = WeightedSpace::unit(dim);
    let f0 = LatticeVector::new(Arc::clone(&space), vec![0.1, 0.2, 0.3, 0.25, 0.15]).unwrap();
    let phi_raw = [0.6, 0.8, 1.0, 1.2, 0.7];
    // Scale so that <phi, f0> = 1: the map becomes a projection.
    let pairing: f64 = phi_raw
        .iter()
        .zip(f0.entries())
        .map(|(p, x)| p * x)
        .sum();
    let phi = Functional::new(
        Arc::clone(&space),
        phi_raw.iter().map(|p| p / pairing).collect(),
    )
    .unwrap();
    let t = PositiveOperator::rank_one(phi.clone(), f0.clone()).unwrap();
    assert!(!t.is_markov(1e-9), "fixed functional is not the norm functional");
    let s = Semigroup::discrete(t);
    let phi_min = phi.coefficients().iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let h = f0.scale(0.9 * phi_min);
    let out = lasota_yorke_certify(&s, &h, 60, 1e-10).unwrap();
    assert!(!out.markov_mode);
    assert_eq!(out.certifier.conclusion, Conclusion::Certified);
    let recovered = out.fixed_functional.unwrap();
    for (a, b) in recovered.coefficients().iter().zip(phi.coefficients()) {
        assert!((a - b).abs() <= 1e-9, "fixed functional recovered");
    }
}

#[test]
fn lasota_yorke_on_continuous_markov_semigroup() {
    let mut r = rng(157);
    let dim = 5;
    let space = WeightedSpace::unit(dim);
    let k = random_stochastic(&mut r, dim);
    let pi = perron_oracle(&k, space.weights());
    let q = k.sub(&DenseMatrix::identity(dim));
    let s = Semigroup::continuous(Arc::clone(&space), q, None).unwrap();
    let out = lasota_yorke_certify(&s, &pi.scale(0.5), 200, 1e-9).unwrap();
    assert!(out.markov_mode, "conservative generator gives Markov T_t");
    assert_eq!(out.certifier.conclusion, Conclusion::Certified);
    let f0 = out.fixed_vector.unwrap();
    assert!(f0.sub(&pi).unwrap().al_norm() <= 1e-8);
}

#[test]
fn uniform_bound_fails_on_projection_with_decaying_columns() {
    // Any candidate of norm >= delta > 0 fails the uniform check on deep
    // vertices whose image norm 2^{-k} drops below delta.
    let g = gallery::build_rank_one_projection(24).unwrap();
    let space = g.semigroup.space().clone();
    let h = LatticeVector::basis(Arc::clone(&space), 0).scale(0.05);
    let r = uniform_lower_bound_check(&g.semigroup, &h, 40, 1e-9, CheckMode::Uniform).unwrap();
    assert!(!r.certified);
    // The sup trace stalls at delta - 2^{-k} for the deepest vertex.
    let final_sup = r.deficiency_trace.last().unwrap().1;
    assert!(final_sup >= 0.05 - 2.0f64.powi(-23) - 1e-12);
}

#[test]
fn doubly_stochastic_circulant_has_uniform_limit() {
    // Circulant doubly stochastic irreducible aperiodic matrix: the fixed
    // density is uniform and the fixed functional is the norm functional.
    let n = 6;
    let space = WeightedSpace::unit(n);
    let mut m = DenseMatrix::zeros(n);
    for j in 0..n {
        m[(j, j)] = 0.5;
        m[((j + 1) % n, j)] = 0.25;
        m[((j + 2) % n, j)] = 0.25;
    }
    let pi = perron_oracle(&m, space.weights());
    for &x in pi.entries() {
        assert!((x - 1.0 / n as f64).abs() <= 1e-12);
    }
    let s = discrete_semigroup(Arc::clone(&space), m);
    let h = pi.scale(0.5);
    let out = lasota_yorke_certify(&s, &h, 300, 1e-10).unwrap();
    assert_eq!(out.certifier.conclusion, Conclusion::Certified);
    let f0 = out.fixed_vector.unwrap();
    for &x in f0.entries() {
        assert!((x - 1.0 / n as f64).abs() <= 1e-9);
    }
    for &c in out.fixed_functional.unwrap().coefficients() {
        assert!((c - 1.0).abs() <= 1e-8);
    }
}

#[test]
fn invariant_density_matches_perron_oracle() {
    let mut r = rng(151);
    let dim = 12;
    let space = WeightedSpace::unit(dim);
    let m = random_stochastic(&mut r, dim);
    let pi = perron_oracle(&m, space.weights());
    let t = PositiveOperator::dense(Arc::clone(&space), m).unwrap();
    let d = semigroup_lab::fp::invariant_density(&t, 1e-13, 10_000).unwrap();
    assert!(d.sub(&pi).unwrap().al_norm() <= 1e-10);
}

#[test]
fn psi_domination_m_equals_one_for_fixed_pair() {
    // Weighted space with a measure-preserving permutation of equal-weight
    // states: the ones vector and the norm functional are both fixed, so the
    // smallest feasible domination constants are exactly 1.
    let space = WeightedSpace::new(vec![2.0, 1.0, 1.0], 1.0).unwrap();
    let map = semigroup_lab::fp::FiniteMap::new(vec![0, 2, 1], Arc::clone(&space)).unwrap();
    let t = semigroup_lab::fp::fp_of_finite_map(&map);
    let ones = LatticeVector::ones(Arc::clone(&space));
    assert!(t.apply(&ones).unwrap().max_abs_diff(&ones) == 0.0);
    let s = Semigroup::discrete(t);
    let psi = Functional::norm_functional(Arc::clone(&space));
    let h = LatticeVector::basis(Arc::clone(&space), 0).scale(0.1);
    let out = psi_lower_bound_certify(&s, &h, &psi, Some(&ones), 40, 1e-10).unwrap();
    assert!((out.m_for_psi - 1.0).abs() <= 1e-12);
    assert_eq!(out.m_for_f0, Some(1.0));
    assert!(!out.psi_domination_growing && !out.f0_domination_growing);
    // Periodic semigroup: no nonzero psi bound certifies, so no prediction,
    // and in particular no violation.
    assert_ne!(out.certifier.conclusion, Conclusion::Violated);
}

#[test]
fn shift_feedback_structural_checks() {
    // Dense functional row plus shift band: neither the operator nor its
    // adjoint is a lattice homomorphism (inspected structurally at dim 16).
    let g = gallery::build_shift_feedback(16).unwrap();
    let op = g.semigroup.generator().unwrap();
    assert!(!op.is_lattice_homomorphism());
    assert!(!op.adjoint_is_lattice_homomorphism());
    assert!(op.is_markov(0.0));
}

#[test]
fn psi_uniform_reduction_equals_al_mode_on_markov_chain() {
    let mut r = rng(149);
    let dim = 5;
    let space = WeightedSpace::unit(dim);
    let m = random_stochastic(&mut r, dim);
    let pi = perron_oracle(&m, space.weights());
    let s = discrete_semigroup(Arc::clone(&space), m);
    let psi = Functional::norm_functional(Arc::clone(&space));
    let h = pi.scale(0.5);
    let out = psi_lower_bound_certify(&s, &h, &psi, Some(&pi), 200, 1e-9).unwrap();
    assert_eq!(out.certifier.conclusion, Conclusion::Certified);
    // With psi = 1 the psi-deficiency trace is the AL uniform trace.
    let al = uniform_lower_bound_check(&s, &h, 200, 1e-9, CheckMode::Uniform).unwrap();
    for ((_, a), (_, b)) in out
        .bound_report
        .deficiency_trace
        .iter()
        .zip(&al.deficiency_trace)
    {
        assert!((a - b).abs() <= 1e-13);
    }
}
