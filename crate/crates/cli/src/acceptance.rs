//! The acceptance suite: eight criteria, each with its tolerances pinned in
//! code and checked against independent oracles (direct linear solves, exact
//! rational closed forms, series evaluations). `run_all` returns one result
//! per criterion; the CLI and the test target print one pass/fail line each.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use semigroup_lab::bounds::{self, Conclusion};
use semigroup_lab::convergence::{
    embedded_discrete_consistency, operator_norm_convergence, orbit_convergence,
};
use semigroup_lab::exact::{
    shift_feedback_product, ExactVector, Rat, ShiftFeedbackExact, WeightedShiftExact,
};
use semigroup_lab::fp::is_measure_preserving;
use semigroup_lab::numeric::DenseMatrix;
use semigroup_lab::{
    gallery, Functional, LatticeVector, NormKind, PositiveOperator, Semigroup, WeightedSpace,
};

#[derive(Debug, Clone, serde::Serialize)]
pub struct CriterionResult {
    pub index: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
    pub elapsed_ms: u128,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {} ({}): {} [{} ms]",
            self.index,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed_ms
        )
    }
}

struct Checks {
    details: Vec<String>,
    ok: bool,
}

impl Checks {
    fn new() -> Self {
        Self {
            details: Vec::new(),
            ok: true,
        }
    }

    fn check(&mut self, name: &str, ok: bool, detail: impl std::fmt::Display) {
        self.ok &= ok;
        self.details
            .push(format!("{} {name}: {detail}", if ok { "ok " } else { "FAIL" }));
    }

    fn finish(self, index: usize, name: &'static str, started: Instant) -> CriterionResult {
        CriterionResult {
            index,
            name,
            passed: self.ok,
            details: self.details,
            elapsed_ms: started.elapsed().as_millis(),
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_stochastic(r: &mut ChaCha8Rng, dim: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(dim);
    for j in 0..dim {
        let mut col: Vec<f64> = (0..dim).map(|_| r.gen_range(0.05..1.0)).collect();
        let sum: f64 = col.iter().sum();
        for c in &mut col {
            *c /= sum;
        }
        for i in 0..dim {
            m[(i, j)] = col[i];
        }
    }
    m
}

/// Stationary density by direct LU solve of `(T - I) x = 0` with the mass
/// normalization row; independent of the orbit machinery it checks.
fn perron_oracle(m: &DenseMatrix, weights: &[f64]) -> Vec<f64> {
    let n = m.dim();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = m[(i, j)] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = weights[j];
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).expect("primitive stochastic matrix");
    x.iter().copied().collect()
}

fn rational_l1_distance(a: &ExactVector, b: &ExactVector) -> Rat {
    a.0.iter()
        .zip(&b.0)
        .map(|(x, y)| (x - y).abs())
        .fold(Rat::zero(), |acc, v| acc + v)
}

/// Criterion 1: exact reproduction of the shift-with-feedback counterexample
/// in rational mode at dimension 64.
pub fn criterion_1() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checks::new();
    let dim = 64;
    let exact = ShiftFeedbackExact::new(dim);

    let markov = (0..dim).all(|j| exact.column_mass(j).is_one());
    c.check("markov_columns_exact", markov, "all 64 column masses equal 1");

    // T^n e_1 = (1 - c_n) e_0 + c_n e_{n+1} exactly for n <= 40.
    let mut f = ExactVector::basis(dim, 1);
    let mut orbit = Vec::with_capacity(40);
    let mut formula_ok = true;
    for n in 1..=40 {
        f = exact.step(&f).0;
        formula_ok &= f == exact.orbit_formula_e1(n);
        orbit.push(f.clone());
    }
    c.check("orbit_formula_exact_to_40", formula_ok, "rational equality at every step");

    let c5 = shift_feedback_product(5);
    let expected = Rat::new(9765.into(), 32768.into());
    c.check("c5_exact", c5 == expected, format!("c_5 = {c5}"));

    // || T^n e_1 - T^m e_1 ||_1 >= 1/2 for 20 <= n < m <= 40, exactly.
    let half = Rat::new(1.into(), 2.into());
    let mut min_dist: Option<Rat> = None;
    let mut separated = true;
    for n in 20..40 {
        for m in (n + 1)..=40 {
            let dist = rational_l1_distance(&orbit[n - 1], &orbit[m - 1]);
            separated &= dist >= half;
            min_dist = Some(match min_dist.take() {
                None => dist,
                Some(d) if dist < d => dist,
                Some(d) => d,
            });
        }
    }
    c.check(
        "pairwise_separation",
        separated,
        format!(
            "min pairwise l1 distance {:.6} >= 0.5",
            min_dist.and_then(|d| d.to_f64()).unwrap_or(f64::NAN)
        ),
    );

    let elapsed = started.elapsed();
    c.check(
        "runtime_under_1s",
        elapsed.as_secs_f64() < 1.0,
        format!("{} ms", elapsed.as_millis()),
    );
    c.finish(1, "shift-feedback exact reproduction", started)
}

/// Criterion 2: Lasota-Yorke certification on 20 random primitive stochastic
/// matrices against the LU eigen-oracle.
pub fn criterion_2() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checks::new();
    let mut r = rng(42);
    let mut worst_limit = 0.0f64;
    let mut worst_f0 = 0.0f64;
    let mut all_certified = true;
    let mut all_rank1 = true;
    for _case in 0..20 {
        let dim = r.gen_range(5..=50);
        let space = WeightedSpace::unit(dim);
        let m = random_stochastic(&mut r, dim);
        let pi = perron_oracle(&m, space.weights());
        let h = LatticeVector::new(Arc::clone(&space), pi.iter().map(|x| 0.5 * x).collect())
            .expect("oracle length");
        let s = Semigroup::discrete(PositiveOperator::dense(Arc::clone(&space), m).unwrap());
        let out = match bounds::lasota_yorke_certify(&s, &h, 300, 1e-12) {
            Ok(out) => out,
            Err(e) => {
                c.check("certification", false, format!("dim {dim}: {e}"));
                continue;
            }
        };
        all_certified &= out.certifier.conclusion == Conclusion::Certified;
        all_rank1 &= out.convergence.rank_estimate == Some(1);
        // Oracle limit: every column is the stationary density.
        let p = out.predicted_limit.expect("converged");
        let mut oracle = DenseMatrix::zeros(dim);
        for j in 0..dim {
            for i in 0..dim {
                oracle[(i, j)] = pi[i];
            }
        }
        worst_limit = worst_limit.max(p.sub(&oracle).weighted_operator_norm(space.weights()));
        worst_f0 = worst_f0.max((out.fixed_vector.unwrap().al_norm() - 1.0).abs());
    }
    c.check("all_20_certified", all_certified, "uniform bound h = Perron/2 certifies");
    c.check("all_rank_one", all_rank1, "limit rank 1 everywhere");
    c.check(
        "limit_matches_eigen_oracle",
        worst_limit <= 1e-10,
        format!("worst operator-norm deviation {worst_limit:.3e} <= 1e-10"),
    );
    c.check(
        "f0_normalized",
        worst_f0 <= 1e-10,
        format!("worst | ||f0|| - 1 | = {worst_f0:.3e}"),
    );
    let elapsed = started.elapsed();
    c.check(
        "runtime_under_5s",
        elapsed.as_secs_f64() < 5.0,
        format!("{} ms", elapsed.as_millis()),
    );
    c.finish(2, "Lasota-Yorke vs eigen oracle", started)
}

/// Criterion 3: two-sidedness of the individual-bound theorem on the
/// block-diagonal suite, and hypothesis failure on the counterexample. No run
/// may certify the hypothesis and fail the conclusion.
pub fn criterion_3() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checks::new();
    let mut r = rng(4242);
    let mut no_violation = true;

    for blocks in [vec![4usize, 5], vec![3, 4, 5], vec![2, 3, 4, 5]] {
        let n: usize = blocks.iter().sum();
        let space = WeightedSpace::unit(n);
        let mut m = DenseMatrix::zeros(n);
        let mut eps = f64::INFINITY;
        let mut offset = 0;
        for &b in &blocks {
            let blk = random_stochastic(&mut r, b);
            let pi = perron_oracle(&blk, &vec![1.0; b]);
            eps = eps.min(pi.iter().fold(f64::INFINITY, |a, &x| a.min(x)));
            for i in 0..b {
                for j in 0..b {
                    m[(offset + i, offset + j)] = blk[(i, j)];
                }
            }
            offset += b;
        }
        let s = Semigroup::discrete(PositiveOperator::dense(Arc::clone(&space), m).unwrap());
        let out = bounds::individual_bounds_certify(&s, eps, 280, 1e-9).unwrap();
        no_violation &= out.certifier.conclusion != Conclusion::Violated;
        c.check(
            &format!("blocks_{:?}_certified", blocks),
            out.hypothesis_holds
                && out.forward == Conclusion::Certified
                && out.backward == Conclusion::Certified,
            format!("epsilon = {eps:.4}, rank {:?}", out.rank_estimate),
        );
        c.check(
            &format!("blocks_{:?}_rank", blocks),
            out.rank_estimate == Some(blocks.len()),
            format!("limit rank {:?} = number of blocks {}", out.rank_estimate, blocks.len()),
        );
    }

    // Counterexample: vertex floors decay to zero with the dimension, the
    // hypothesis fails for every positive epsilon, and convergence fails.
    let mut last_floor = f64::INFINITY;
    for dim in [16usize, 32, 64] {
        let g = gallery::build_shift_feedback(dim).unwrap();
        let horizon = gallery::max_exact_horizon(dim);
        for eps in [1e-1, 1e-2, 1e-3] {
            let out = bounds::individual_bounds_certify(&g.semigroup, eps, horizon, 1e-9).unwrap();
            no_violation &= out.certifier.conclusion != Conclusion::Violated;
            c.check(
                &format!("counterexample_dim{dim}_eps{eps:.0e}"),
                !out.hypothesis_holds && !out.converged,
                format!("min vertex floor {:.3e}", out.min_raw_norm),
            );
            if eps == 1e-3 {
                c.check(
                    &format!("counterexample_dim{dim}_floor_decays"),
                    out.min_raw_norm < last_floor,
                    format!("{:.3e} < {:.3e}", out.min_raw_norm, last_floor),
                );
                last_floor = out.min_raw_norm;
            }
        }
    }
    c.check(
        "no_hypothesis_certified_with_failed_conclusion",
        no_violation,
        "no certifier run reported a violation",
    );
    c.finish(3, "individual-bound two-sidedness", started)
}

/// Criterion 4: Ding certification on the collapse chain and the rank-one
/// projection.
pub fn criterion_4() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checks::new();

    let s = gallery::build_collapse_chain(100).unwrap();
    let out = bounds::ding_certify(&s, 230, 1e-10, bounds::DEFAULT_POSITIVITY_FLOOR).unwrap();
    c.check(
        "collapse_chain_certified",
        out.certifier.conclusion == Conclusion::Certified,
        format!("{:?}", out.certifier.conclusion),
    );
    if let Some(p) = &out.limit {
        let is_e1 = (0..100).all(|j| (p[(1, j)] - 1.0).abs() <= 1e-12);
        c.check("collapse_chain_limit", is_e1, "limit is 1 ⊗ e_1");
    }
    c.check(
        "collapse_chain_positive_columns",
        out.min_column_norm.unwrap_or(0.0) > 0.0,
        format!("min column norm {:?}", out.min_column_norm),
    );

    let dim = 32;
    let g = gallery::build_rank_one_projection(dim).unwrap();
    let floor = 0.5f64.powi(dim as i32 + 1);
    let out = bounds::ding_certify(&g.semigroup, 60, 1e-10, floor).unwrap();
    c.check(
        "projection_certified",
        out.certifier.conclusion == Conclusion::Certified,
        format!("{:?} at positivity floor {floor:.1e}", out.certifier.conclusion),
    );
    let p = out.limit.as_ref().unwrap();
    let t = g.operator.to_dense().unwrap();
    c.check(
        "projection_limit_is_t",
        p.sub(&t).max_abs() <= 1e-15,
        "P = T",
    );
    let mut columns_ok = true;
    let mut worst = 0.0f64;
    for k in 0..dim {
        let norm: f64 = p.column(k).iter().map(|x| x.abs()).sum();
        let dev = (norm - 0.5f64.powi(k as i32)).abs();
        worst = worst.max(dev);
        columns_ok &= dev <= 1e-12;
    }
    c.check(
        "projection_column_norms",
        columns_ok,
        format!("|| P e_k || = 2^-k, worst deviation {worst:.3e} <= 1e-12"),
    );
    c.finish(4, "Ding certification", started)
}

/// Criterion 5: the measure-preserving suite. Doubling Ulam and cyclic
/// permutations preserve the measure and are not norm convergent within the
/// trustworthy horizon (exact distances for doubling); the two-point
/// non-preserving instance converges to a non-identity limit; no
/// measure-preserving, norm-convergent, non-identity instance exists.
pub fn criterion_5() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checks::new();
    let k = 8usize;
    let cells = 1usize << k;

    let u = gallery::build_doubling_ulam(cells).unwrap();
    c.check(
        "doubling_measure_preserving",
        is_measure_preserving(&u.operator, 0.0),
        "constant density is fixed exactly",
    );
    let weights = u.operator.space().weights().to_vec();
    let t = u.operator.to_dense().unwrap();
    let mut p = DenseMatrix::zeros(cells);
    for j in 0..cells {
        for i in 0..cells {
            p[(i, j)] = 1.0 / cells as f64;
        }
    }
    let mut m = DenseMatrix::identity(cells);
    let mut exact_ok = true;
    let mut above_one = true;
    for n in 0..k {
        let expected = 2.0 * (1.0 - 2.0f64.powi(n as i32 - k as i32));
        let got = m.sub(&p).weighted_operator_norm(&weights);
        exact_ok &= (got - expected).abs() <= 1e-14;
        above_one &= got >= 1.0;
        m = t.matmul(&m);
    }
    c.check(
        "doubling_norm_distance_exact",
        exact_ok,
        "|| T^n - P || = 2 (1 - 2^{n-8}) for n < 8",
    );
    c.check("doubling_norm_distance_floor", above_one, ">= 1 for n < 8");
    let resolution = gallery::ulam_resolution_horizon(2.0, cells);
    let s = Semigroup::discrete(u.operator.clone());
    let norm_conv = operator_norm_convergence(&s, resolution - 1, 1e-10).unwrap();
    c.check(
        "doubling_not_norm_convergent",
        !norm_conv.converged,
        format!("within resolution horizon {}", resolution - 1),
    );

    // Suite sweep: (preserving, norm-convergent) forces identity.
    let mut suite: Vec<(String, Semigroup, PositiveOperator, usize)> = Vec::new();
    for n in [3usize, 8] {
        let s = gallery::build_cyclic_permutation(n).unwrap();
        let op = s.generator().unwrap().clone();
        suite.push((format!("cyclic-{n}"), s, op, 60));
    }
    {
        let s = gallery::build_identity(6).unwrap();
        let op = s.generator().unwrap().clone();
        suite.push(("identity".into(), s, op, 40));
    }
    {
        let (s, op) = gallery::build_two_point_collapse().unwrap();
        suite.push(("two-point".into(), s, op, 40));
    }
    suite.push((
        "doubling".into(),
        Semigroup::discrete(u.operator.clone()),
        u.operator.clone(),
        resolution - 1,
    ));

    let mut rigidity_ok = true;
    for (label, s, op, horizon) in &suite {
        let preserving = is_measure_preserving(op, 1e-12);
        let report = operator_norm_convergence(s, *horizon, 1e-10).unwrap();
        if label.starts_with("cyclic") {
            c.check(
                &format!("{label}_preserving_not_convergent"),
                preserving && !report.converged,
                format!("preserving={preserving} converged={}", report.converged),
            );
        }
        if label == "two-point" {
            let not_identity = report
                .limit
                .as_ref()
                .map(|p| p.sub(&DenseMatrix::identity(2)).max_abs() > 0.5)
                .unwrap_or(false);
            c.check(
                "two_point_convergent_non_identity_non_preserving",
                !preserving && report.converged && not_identity,
                format!("preserving={preserving} converged={}", report.converged),
            );
        }
        if preserving && report.converged {
            let id = DenseMatrix::identity(op.dim());
            rigidity_ok &= report.limit.as_ref().unwrap().sub(&id).max_abs() <= 1e-12;
        }
    }
    c.check(
        "no_preserving_convergent_non_identity",
        rigidity_ok,
        "every measure-preserving norm-convergent instance is the identity",
    );
    c.finish(5, "measure-preserving rigidity suite", started)
}

/// Criterion 6: the weighted-shift instance at dimension 400, p = 2.
pub fn criterion_6() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checks::new();
    let dim = 400;
    let p = 2.0;
    let horizon = 300;
    let g = gallery::build_weighted_shift(dim, p).unwrap();

    // Exact tail p-norm conservation for compatible supports (rational).
    let exact = WeightedShiftExact::new(dim, p as u32);
    let mut f = ExactVector::zeros(dim);
    f.0[1] = Rat::one();
    f.0[7] = Rat::new(3.into(), 1.into());
    let before = exact.tail_p_norm_pow(&f);
    let mut conserved = true;
    for _ in 0..60 {
        let (next, escaped) = exact.step(&f);
        conserved &= escaped.is_zero();
        f = next;
        conserved &= exact.tail_p_norm_pow(&f) == before;
    }
    c.check(
        "exact_tail_norm_conservation",
        conserved,
        "rational p-norm of the tail is constant over 60 steps",
    );

    // Float-mode conservation along the full horizon.
    let e1 = LatticeVector::basis(g.native.space().clone(), 1);
    let orbit = g.native.unit_orbit(&e1, horizon).unwrap();
    let mut float_conserved = true;
    for point in &orbit.points {
        let tail: f64 = point
            .entries()
            .iter()
            .zip(g.native.space().weights())
            .skip(1)
            .map(|(x, w)| w * x.abs().powf(p))
            .sum::<f64>()
            .sqrt();
        float_conserved &= (tail - 1.0).abs() <= 1e-12;
    }
    c.check(
        "float_tail_norm_conservation",
        float_conserved,
        "l2 tail norm of the e_1 orbit stays 1 to 1e-12",
    );

    // Native l2 diagnostic: non-convergence with a large tail residual.
    let native = orbit_convergence(&g.native, &e1, horizon, 1e-9).unwrap();
    c.check(
        "native_l2_not_convergent",
        !native.converged && native.tail_residual >= 0.9,
        format!("tail residual {:.4} >= 0.9 ||e_1||_2", native.tail_residual),
    );

    // l1 envelope: T^n e_1 -> <psi_1, e_1> e_0 with the residual given by the
    // independent series oracle sum_j j^{p-1}/(j+n)^{p-1} f(j) j^{-p} (tail
    // mass) plus the identical head gap: 2 (1+n)^{1-p} for f = e_1.
    let e1_env = LatticeVector::basis(g.envelope.space().clone(), 1);
    let env_orbit = g.envelope.unit_orbit(&e1_env, horizon).unwrap();
    let target = LatticeVector::basis(g.envelope.space().clone(), 0);
    let measured = env_orbit
        .points
        .last()
        .unwrap()
        .sub(&target)
        .unwrap()
        .al_norm();
    let n = horizon as f64;
    let oracle = 2.0 * (1.0 + n).powf(1.0 - p);
    c.check(
        "envelope_residual_matches_series_oracle",
        (measured - oracle).abs() <= 1e-12,
        format!("measured {measured:.6e} vs oracle {oracle:.6e} at n = 300"),
    );
    c.check(
        "envelope_residual_small",
        measured < 1e-2,
        format!("residual {measured:.4e} below 1e-2 (closed form 2/301)"),
    );
    let mut decreasing = true;
    let mut prev = f64::INFINITY;
    for point in &env_orbit.points {
        let d = point.sub(&target).unwrap().al_norm();
        decreasing &= d <= prev + 1e-15;
        prev = d;
    }
    c.check("envelope_residual_decreasing", decreasing, "monotone decay to 0");

    let elapsed = started.elapsed();
    c.check(
        "runtime_under_10s",
        elapsed.as_secs_f64() < 10.0,
        format!("{} ms", elapsed.as_millis()),
    );
    c.finish(6, "weighted-shift native vs envelope", started)
}

/// Criterion 7: embedded-discrete consistency for a uniformized primitive
/// generator and the rotation counterexample.
pub fn criterion_7() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checks::new();

    let mut r = rng(424242);
    let dim = 4;
    let space = WeightedSpace::unit(dim);
    let kmat = random_stochastic(&mut r, dim);
    let q = kmat.sub(&DenseMatrix::identity(dim));
    let s = Semigroup::continuous(Arc::clone(&space), q, None).unwrap();
    let report = embedded_discrete_consistency(
        &s,
        &[0.3, 1.0, std::f64::consts::SQRT_2],
        220,
        1e-8,
    )
    .unwrap();
    c.check(
        "embedded_limits_agree",
        report.all_embedded_agree && report.pairwise_defect <= 1e-8,
        format!("pairwise defect {:.3e} <= 1e-8", report.pairwise_defect),
    );
    c.check(
        "continuous_agrees",
        report.continuous_converged && !report.violated,
        "direct continuous diagnostic matches every embedding",
    );
    c.check(
        "rank_one_shortcut_fired",
        report.rank_one_prediction,
        "a rank-1 embedded limit predicted full convergence",
    );

    let t0 = 1.3;
    let rot = gallery::build_rotation(t0).unwrap();
    let report = embedded_discrete_consistency(&rot, &[t0 / 2.0, t0], 80, 1e-9).unwrap();
    c.check(
        "rotation_pattern",
        report.steps[1].converged && !report.steps[0].converged && !report.continuous_converged,
        "embedded-at-period converges, half-period and full semigroup do not",
    );
    c.check(
        "rotation_no_violation",
        !report.violated && report.steps[1].rank_estimate == Some(2),
        "non-rank-1 embedded limit makes no prediction",
    );
    c.finish(7, "embedded-discrete consistency", started)
}

/// Criterion 8: randomized property suites, >= 1000 cases each from a fixed
/// seed, zero failures allowed.
pub fn criterion_8() -> CriterionResult {
    let started = Instant::now();
    let mut c = Checks::new();
    let cases = 1000usize;

    // Vertex-reduction soundness on random Markov operators.
    {
        let mut r = rng(8001);
        let mut failures = 0usize;
        let mut run = 0usize;
        while run < cases {
            let dim = r.gen_range(2..12);
            let space = WeightedSpace::unit(dim);
            let t =
                PositiveOperator::dense(Arc::clone(&space), random_stochastic(&mut r, dim)).unwrap();
            let h = LatticeVector::new(
                Arc::clone(&space),
                (0..dim).map(|_| r.gen_range(0.0..0.6)).collect(),
            )
            .unwrap();
            let mut vertex_sup = 0.0f64;
            for j in 0..dim {
                let v = LatticeVector::basis(Arc::clone(&space), j);
                vertex_sup = vertex_sup.max(
                    t.apply(&v)
                        .unwrap()
                        .deficiency(&h, &NormKind::Al)
                        .unwrap(),
                );
            }
            for _ in 0..5 {
                let raw: Vec<f64> = (0..dim).map(|_| r.gen_range(0.0..1.0)).collect();
                let norm: f64 = raw.iter().sum();
                let f = LatticeVector::new(
                    Arc::clone(&space),
                    raw.iter().map(|x| x / norm).collect(),
                )
                .unwrap();
                let d = t.apply(&f).unwrap().deficiency(&h, &NormKind::Al).unwrap();
                if d > vertex_sup + 1e-12 {
                    failures += 1;
                }
                run += 1;
            }
        }
        c.check(
            "vertex_reduction_soundness",
            failures == 0,
            format!("{run} cases, {failures} failures"),
        );
    }

    // Adjoint duality across kernel shapes.
    {
        let mut r = rng(8002);
        let mut failures = 0usize;
        let mut run = 0usize;
        while run < cases {
            let dim = r.gen_range(2..14);
            let space = WeightedSpace::new(
                (0..dim).map(|_| r.gen_range(0.2..3.0)).collect(),
                1.0,
            )
            .unwrap();
            for t in kernel_zoo(&mut r, &space) {
                let f = LatticeVector::new(
                    Arc::clone(&space),
                    (0..dim).map(|_| r.gen_range(-2.0..2.0)).collect(),
                )
                .unwrap();
                let phi = Functional::new(
                    Arc::clone(&space),
                    (0..dim).map(|_| r.gen_range(-2.0..2.0)).collect(),
                )
                .unwrap();
                let lhs = t.adjoint_apply(&phi).unwrap().apply(&f).unwrap();
                let rhs = phi.apply(&t.apply(&f).unwrap()).unwrap();
                if (lhs - rhs).abs() > 1e-12 * lhs.abs().max(rhs.abs()).max(1.0) {
                    failures += 1;
                }
                run += 1;
            }
        }
        c.check("adjoint_duality", failures == 0, format!("{run} cases, {failures} failures"));
    }

    // Lattice-homomorphism modulus identity on random permutation transports.
    {
        let mut r = rng(8003);
        let mut failures = 0usize;
        for _ in 0..cases {
            let dim = r.gen_range(2..16);
            let space = WeightedSpace::unit(dim);
            let mut sigma: Vec<usize> = (0..dim).collect();
            for i in (1..dim).rev() {
                let j = r.gen_range(0..=i);
                sigma.swap(i, j);
            }
            let gains: Vec<f64> = (0..dim).map(|_| r.gen_range(0.0..3.0)).collect();
            let t = PositiveOperator::transport(Arc::clone(&space), sigma, gains).unwrap();
            let f = LatticeVector::new(
                Arc::clone(&space),
                (0..dim).map(|_| r.gen_range(-4.0..4.0)).collect(),
            )
            .unwrap();
            let lhs = t.apply(&f).unwrap().abs();
            let rhs = t.apply(&f.abs()).unwrap();
            if !t.is_lattice_homomorphism() || lhs.max_abs_diff(&rhs) != 0.0 {
                failures += 1;
            }
        }
        c.check(
            "lattice_homomorphism_modulus",
            failures == 0,
            format!("{cases} cases, {failures} failures"),
        );
    }

    // Interval-preservation witness validity.
    {
        let mut r = rng(8004);
        let mut failures = 0usize;
        for _ in 0..cases {
            let dim = 20;
            let space = WeightedSpace::unit(dim);
            let sigma: Vec<usize> = (0..dim).map(|_| r.gen_range(0..dim)).collect();
            let gains: Vec<f64> = (0..dim).map(|_| r.gen_range(0.1..2.0)).collect();
            let t = PositiveOperator::transport(Arc::clone(&space), sigma, gains).unwrap();
            let f = LatticeVector::new(
                Arc::clone(&space),
                (0..dim).map(|_| r.gen_range(0.0..1.0)).collect(),
            )
            .unwrap();
            let g = f
                .add(
                    &LatticeVector::new(
                        Arc::clone(&space),
                        (0..dim).map(|_| r.gen_range(0.0..1.5)).collect(),
                    )
                    .unwrap(),
                )
                .unwrap();
            let x_arg = LatticeVector::new(
                Arc::clone(&space),
                f.entries()
                    .iter()
                    .zip(g.entries())
                    .map(|(a, b)| a + r.gen_range(0.0..1.0) * (b - a))
                    .collect(),
            )
            .unwrap();
            let y = t.apply(&x_arg).unwrap();
            match t.interval_preservation_witness(&f, &g, &y) {
                Ok(x) => {
                    let scale = 1.0 + y.entries().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    let ok = f.le(&x)
                        && x.le(&g)
                        && t.apply(&x).unwrap().max_abs_diff(&y) <= 1e-12 * scale;
                    if !ok {
                        failures += 1;
                    }
                }
                Err(_) => failures += 1,
            }
        }
        c.check(
            "interval_preservation_witness",
            failures == 0,
            format!("{cases} cases, {failures} failures"),
        );
    }

    // Equal-norm inequality: ||(f-h)^+|| <= ||(f-h)^-|| when norms agree.
    {
        let mut r = rng(8005);
        let mut failures = 0usize;
        for _ in 0..cases {
            let dim = r.gen_range(1..20);
            let space = WeightedSpace::new(
                (0..dim).map(|_| r.gen_range(0.1..4.0)).collect(),
                1.0,
            )
            .unwrap();
            let normalize = |raw: Vec<f64>| {
                let v = LatticeVector::new(Arc::clone(&space), raw).unwrap();
                let n = v.al_norm();
                v.scale(1.0 / n)
            };
            let f = normalize((0..dim).map(|_| r.gen_range(0.01..1.0)).collect());
            let h = normalize((0..dim).map(|_| r.gen_range(0.01..1.0)).collect());
            let (pos, neg) = f.sub(&h).unwrap().decompose();
            if pos.al_norm() > neg.al_norm() + 1e-12 {
                failures += 1;
            }
            let d = f.deficiency(&h, &NormKind::Al).unwrap();
            if f.sub(&h).unwrap().al_norm() > 2.0 * d + 1e-12 {
                failures += 1;
            }
        }
        c.check(
            "equal_norm_inequality",
            failures == 0,
            format!("{cases} cases, {failures} failures"),
        );
    }

    // AL-norm additivity on the positive cone.
    {
        let mut r = rng(8006);
        let mut failures = 0usize;
        for _ in 0..cases {
            let dim = r.gen_range(1..40);
            let space = WeightedSpace::new(
                (0..dim).map(|_| r.gen_range(0.1..4.0)).collect(),
                1.0,
            )
            .unwrap();
            let f = LatticeVector::new(
                Arc::clone(&space),
                (0..dim).map(|_| r.gen_range(0.0..3.0)).collect(),
            )
            .unwrap();
            let g = LatticeVector::new(
                Arc::clone(&space),
                (0..dim).map(|_| r.gen_range(0.0..3.0)).collect(),
            )
            .unwrap();
            let lhs = f.add(&g).unwrap().al_norm();
            let rhs = f.al_norm() + g.al_norm();
            if (lhs - rhs).abs() > 4.0 * dim as f64 * f64::EPSILON * rhs.max(1.0) {
                failures += 1;
            }
        }
        c.check(
            "al_norm_additivity",
            failures == 0,
            format!("{cases} cases, {failures} failures"),
        );
    }

    c.finish(8, "randomized property suites", started)
}

fn kernel_zoo(r: &mut ChaCha8Rng, space: &Arc<WeightedSpace>) -> Vec<PositiveOperator> {
    let dim = space.dim();
    let mut dense = DenseMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            dense[(i, j)] = r.gen_range(0.0..1.0);
        }
    }
    let triplets: Vec<(usize, usize, f64)> = (0..2 * dim)
        .map(|_| (r.gen_range(0..dim), r.gen_range(0..dim), r.gen_range(0.0..1.5)))
        .collect();
    let phi = Functional::new(
        Arc::clone(space),
        (0..dim).map(|_| r.gen_range(0.0..1.0)).collect(),
    )
    .unwrap();
    let vector = LatticeVector::new(
        Arc::clone(space),
        (0..dim).map(|_| r.gen_range(0.0..1.0)).collect(),
    )
    .unwrap();
    let sigma: Vec<usize> = (0..dim).map(|_| r.gen_range(0..dim)).collect();
    let gains: Vec<f64> = (0..dim).map(|_| r.gen_range(0.0..2.0)).collect();
    let dense_op = PositiveOperator::dense(Arc::clone(space), dense).unwrap();
    let sparse_op = PositiveOperator::sparse(Arc::clone(space), triplets).unwrap();
    let rank_one = PositiveOperator::rank_one(phi, vector).unwrap();
    let shift = PositiveOperator::right_shift(Arc::clone(space));
    let diag = PositiveOperator::diagonal(
        Arc::clone(space),
        (0..dim).map(|_| r.gen_range(0.0..2.0)).collect(),
    )
    .unwrap();
    let transport = PositiveOperator::transport(Arc::clone(space), sigma, gains).unwrap();
    let sum = PositiveOperator::sum(vec![rank_one.clone(), diag.clone()]).unwrap();
    let compose = PositiveOperator::compose(vec![shift.clone(), sparse_op.clone()]).unwrap();
    vec![dense_op, sparse_op, rank_one, shift, diag, transport, sum, compose]
}

/// Runs every criterion on its own worker thread (they are independent and
/// deterministic) and merges the results in criterion order.
pub fn run_all() -> Vec<CriterionResult> {
    let criteria: Vec<fn() -> CriterionResult> = vec![
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
    ];
    std::thread::scope(|scope| {
        let handles: Vec<_> = criteria.iter().map(|f| scope.spawn(f)).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion thread panicked"))
            .collect()
    })
}
