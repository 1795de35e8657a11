//! Discrete and continuous-time positive semigroups.
//!
//! Discrete semigroups iterate one generator operator. Continuous semigroups
//! are given by a conservative-or-subconservative rate matrix and evaluated
//! through uniformization, `exp(tQ) = e^{-lambda t} sum_k (lambda t)^k / k!
//! (I + Q/lambda)^k`, which preserves positivity term by term. The rotation
//! semigroup on R^2 is carried as a quarantined, positivity-exempt mode that
//! only the embedded-discrete diagnostics accept.

use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::numeric::{csum, DenseMatrix};
use crate::operator::PositiveOperator;
use crate::space::WeightedSpace;
use crate::vector::LatticeVector;

#[derive(Debug, Clone)]
pub enum SemigroupKind {
    /// Powers of a single positive operator; times are positive integers.
    Discrete { generator: PositiveOperator },
    /// Uniformized exponential of a rate matrix `Q` with nonnegative
    /// off-diagonals and weighted column sums <= 0 (= 0 exactly for a Markov
    /// semigroup). `lambda >= max_j |Q_jj|`.
    Continuous { rate_matrix: DenseMatrix, lambda: f64 },
    /// Rotation of R^2 with the given period; not positive.
    Rotation { period: f64 },
}

#[derive(Debug, Clone)]
pub struct Semigroup {
    space: Arc<WeightedSpace>,
    kind: SemigroupKind,
    bound_hint: Option<f64>,
}

/// An evaluated orbit `t -> T_t f` with the cumulative escaped AL mass.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub times: Vec<f64>,
    pub points: Vec<LatticeVector>,
    /// Cumulative AL mass pushed past the truncation boundary up to each time.
    pub escaped: Vec<f64>,
}

impl Semigroup {
    pub fn discrete(generator: PositiveOperator) -> Self {
        Self {
            space: Arc::clone(generator.space()),
            kind: SemigroupKind::Discrete { generator },
            bound_hint: None,
        }
    }

    /// Continuous semigroup from a rate matrix. `lambda = None` picks the
    /// smallest admissible uniformization rate `max_j |Q_jj|`.
    pub fn continuous(
        space: Arc<WeightedSpace>,
        rate_matrix: DenseMatrix,
        lambda: Option<f64>,
    ) -> Result<Self> {
        let n = space.dim();
        if rate_matrix.dim() != n {
            return Err(LabError::DimensionMismatch {
                left: rate_matrix.dim(),
                right: n,
            });
        }
        let mut max_diag = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let q = rate_matrix[(i, j)];
                if i != j && q < 0.0 {
                    return Err(LabError::InvalidOperator(format!(
                        "rate matrix off-diagonal ({i},{j}) = {q} is negative"
                    )));
                }
                if i == j {
                    max_diag = max_diag.max(q.abs());
                }
            }
        }
        for j in 0..n {
            let col_mass = csum((0..n).map(|i| space.weight(i) * rate_matrix[(i, j)]));
            if col_mass > 1e-12 * (1.0 + max_diag) {
                return Err(LabError::InvalidOperator(format!(
                    "rate matrix column {j} has positive weighted mass {col_mass:.3e}"
                )));
            }
        }
        let lambda = match lambda {
            Some(l) => {
                if l < max_diag {
                    return Err(LabError::InvalidConfig(format!(
                        "uniformization rate {l} below max |Q_jj| = {max_diag}"
                    )));
                }
                l
            }
            None => max_diag,
        };
        Ok(Self {
            space,
            kind: SemigroupKind::Continuous {
                rate_matrix,
                lambda,
            },
            bound_hint: None,
        })
    }

    pub fn rotation(period: f64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(LabError::InvalidConfig(format!(
                "rotation period must be positive, got {period}"
            )));
        }
        Ok(Self {
            space: WeightedSpace::unit(2),
            kind: SemigroupKind::Rotation { period },
            bound_hint: Some(1.0),
        })
    }

    pub fn with_bound_hint(mut self, bound: f64) -> Self {
        self.bound_hint = Some(bound);
        self
    }

    pub fn space(&self) -> &Arc<WeightedSpace> {
        &self.space
    }

    pub fn kind(&self) -> &SemigroupKind {
        &self.kind
    }

    pub fn bound_hint(&self) -> Option<f64> {
        self.bound_hint
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.kind, SemigroupKind::Discrete { .. })
    }

    pub fn is_positivity_exempt(&self) -> bool {
        match &self.kind {
            SemigroupKind::Rotation { .. } => true,
            SemigroupKind::Discrete { generator } => generator.is_positivity_exempt(),
            SemigroupKind::Continuous { .. } => false,
        }
    }

    /// The discrete generator, if this is a discrete semigroup.
    pub fn generator(&self) -> Option<&PositiveOperator> {
        match &self.kind {
            SemigroupKind::Discrete { generator } => Some(generator),
            _ => None,
        }
    }

    /// Evaluates `T_t`. Discrete mode requires `t` to be a positive integer
    /// (within 1e-9); `t = 1` returns the structured generator itself, larger
    /// powers are materialized densely.
    pub fn evaluate(&self, t: f64) -> Result<PositiveOperator> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(LabError::InvalidTime(t));
        }
        match &self.kind {
            SemigroupKind::Discrete { generator } => {
                let n = t.round();
                if (t - n).abs() > 1e-9 || n < 1.0 {
                    return Err(LabError::InvalidTime(t));
                }
                let n = n as u64;
                if n == 1 {
                    return Ok(generator.clone());
                }
                let base = generator.to_dense()?;
                let powered = matrix_power(&base, n);
                PositiveOperator::dense(Arc::clone(&self.space), powered)
            }
            SemigroupKind::Continuous { rate_matrix, lambda } => {
                let m = uniformized_exponential(rate_matrix, *lambda, t);
                PositiveOperator::dense(Arc::clone(&self.space), m)
            }
            SemigroupKind::Rotation { period } => {
                let theta = 2.0 * std::f64::consts::PI * t / period;
                let m = DenseMatrix::from_rows(vec![
                    vec![theta.cos(), -theta.sin()],
                    vec![theta.sin(), theta.cos()],
                ]);
                PositiveOperator::dense_positivity_exempt(Arc::clone(&self.space), m)
            }
        }
    }

    /// Orbit of `f` along strictly increasing times, computed incrementally
    /// (repeated application of gap operators, not re-exponentiation).
    pub fn orbit(&self, f: &LatticeVector, times: &[f64]) -> Result<Orbit> {
        self.space.check_same(f.space())?;
        if times.windows(2).any(|w| w[1] <= w[0]) || times.first().is_some_and(|&t| t <= 0.0) {
            return Err(LabError::InvalidConfig(
                "orbit times must be strictly increasing and positive".into(),
            ));
        }
        let mut points = Vec::with_capacity(times.len());
        let mut escaped = Vec::with_capacity(times.len());
        let mut current = f.clone();
        let mut esc_total = 0.0;
        let mut prev_t = 0.0;
        // Cache gap operators: grids mostly reuse one gap.
        let mut cached: Option<(f64, PositiveOperator)> = None;
        for &t in times {
            let gap = t - prev_t;
            match &self.kind {
                SemigroupKind::Discrete { generator } => {
                    let steps = gap.round();
                    if (gap - steps).abs() > 1e-9 || steps < 1.0 {
                        return Err(LabError::InvalidTime(t));
                    }
                    for _ in 0..steps as u64 {
                        let (next, e) = generator.apply_tracked(&current)?;
                        current = next;
                        esc_total += e;
                    }
                }
                _ => {
                    let op = match &cached {
                        Some((g, op)) if *g == gap => op.clone(),
                        _ => {
                            let op = self.evaluate(gap)?;
                            cached = Some((gap, op.clone()));
                            op
                        }
                    };
                    let (next, e) = op.apply_tracked(&current)?;
                    current = next;
                    esc_total += e;
                }
            }
            points.push(current.clone());
            escaped.push(esc_total);
            prev_t = t;
        }
        Ok(Orbit {
            times: times.to_vec(),
            points,
            escaped,
        })
    }

    /// Orbit sampled at unit times `1..=horizon`.
    pub fn unit_orbit(&self, f: &LatticeVector, horizon: usize) -> Result<Orbit> {
        let times: Vec<f64> = (1..=horizon).map(|k| k as f64).collect();
        self.orbit(f, &times)
    }

    /// The one-step operator used by unit-grid diagnostics: the structured
    /// generator in discrete mode, `T_1` otherwise.
    pub fn unit_step(&self) -> Result<PositiveOperator> {
        self.evaluate(1.0)
    }
}

fn matrix_power(base: &DenseMatrix, mut n: u64) -> DenseMatrix {
    let mut result = DenseMatrix::identity(base.dim());
    let mut sq = base.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = result.matmul(&sq);
        }
        n >>= 1;
        if n > 0 {
            sq = sq.matmul(&sq);
        }
    }
    result
}

/// Poisson tail cutoff for uniformization.
const POISSON_TAIL: f64 = 1e-14;

fn uniformized_exponential(q: &DenseMatrix, lambda: f64, t: f64) -> DenseMatrix {
    let n = q.dim();
    if lambda == 0.0 {
        // Q = 0: the identity semigroup.
        return DenseMatrix::identity(n);
    }
    let rate = lambda * t;
    if rate > 500.0 {
        // Halve until the Poisson weights are representable; squaring a
        // positive matrix keeps positivity.
        let half = uniformized_exponential(q, lambda, t / 2.0);
        return half.matmul(&half);
    }
    // P = I + Q / lambda is positive by the lambda constraint.
    let mut p = q.scale(1.0 / lambda);
    for i in 0..n {
        p[(i, i)] += 1.0;
    }
    let mut weight = (-rate).exp();
    let mut cumulative = weight;
    let mut term = DenseMatrix::identity(n); // P^k
    let mut acc = term.scale(weight);
    let mut k = 0u64;
    while 1.0 - cumulative > POISSON_TAIL {
        k += 1;
        term = p.matmul(&term);
        weight *= rate / k as f64;
        cumulative += weight;
        acc = acc.add(&term.scale(weight));
        if k > 100_000 {
            break; // unreachable for rate <= 500, kept as a hard stop
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_time_one_is_generator() {
        let space = WeightedSpace::unit(3);
        let t = PositiveOperator::right_shift(space);
        let s = Semigroup::discrete(t);
        let op = s.evaluate(1.0).unwrap();
        assert!(matches!(op.kernel(), crate::operator::Kernel::RightShift));
        assert!(s.evaluate(0.5).is_err());
        assert!(s.evaluate(-1.0).is_err());
    }

    #[test]
    fn zero_rate_matrix_gives_identity() {
        let space = WeightedSpace::unit(3);
        let s = Semigroup::continuous(space.clone(), DenseMatrix::zeros(3), None).unwrap();
        for t in [0.25, 1.0, 7.5] {
            let m = s.evaluate(t).unwrap().to_dense().unwrap();
            assert!(m.sub(&DenseMatrix::identity(3)).max_abs() < 1e-15);
        }
    }

    #[test]
    fn two_state_exchange_generator_matches_closed_form() {
        // Q = [[-1, 1], [1, -1]]: off-diagonal of exp(tQ) is (1 - e^{-2t})/2.
        let space = WeightedSpace::unit(2);
        let q = DenseMatrix::from_rows(vec![vec![-1.0, 1.0], vec![1.0, -1.0]]);
        let s = Semigroup::continuous(space, q, None).unwrap();
        for t in [0.1, 0.5, 1.0, 3.0, 10.0] {
            let m = s.evaluate(t).unwrap().to_dense().unwrap();
            let off = (1.0 - (-2.0 * t).exp()) / 2.0;
            assert!((m[(0, 1)] - off).abs() < 1e-12, "t={t}");
            assert!((m[(1, 0)] - off).abs() < 1e-12);
            assert!((m[(0, 0)] - (1.0 - off)).abs() < 1e-12);
        }
    }

    #[test]
    fn semigroup_law_on_grid() {
        let space = WeightedSpace::unit(2);
        let q = DenseMatrix::from_rows(vec![vec![-0.7, 0.3], vec![0.7, -0.3]]);
        let s = Semigroup::continuous(space, q, None).unwrap();
        for i in 1..=10 {
            for j in 1..=10 {
                let (a, b) = (0.3 * i as f64, 0.45 * j as f64);
                let lhs = s.evaluate(a + b).unwrap().to_dense().unwrap();
                let rhs = s
                    .evaluate(a)
                    .unwrap()
                    .to_dense()
                    .unwrap()
                    .matmul(&s.evaluate(b).unwrap().to_dense().unwrap());
                assert!(
                    lhs.sub(&rhs).weighted_operator_norm(&[1.0, 1.0]) <= 1e-10,
                    "law violated at s={a}, t={b}"
                );
            }
        }
    }

    #[test]
    fn rotation_has_period_and_negative_entries() {
        let s = Semigroup::rotation(2.0).unwrap();
        let full = s.evaluate(2.0).unwrap().to_dense().unwrap();
        assert!(full.sub(&DenseMatrix::identity(2)).max_abs() < 1e-12);
        let half = s.evaluate(1.0).unwrap();
        assert!(half.is_positivity_exempt());
        assert!(half.to_dense().unwrap()[(0, 0)] < 0.0);
    }

    #[test]
    fn discrete_orbit_tracks_escape() {
        let space = WeightedSpace::unit(3);
        let s = Semigroup::discrete(PositiveOperator::right_shift(space.clone()));
        let f = LatticeVector::new(space, vec![0.0, 0.0, 1.0]).unwrap();
        let orbit = s.unit_orbit(&f, 3).unwrap();
        assert_eq!(orbit.escaped, vec![1.0, 1.0, 1.0]);
        assert!(orbit.points[0].is_zero());
    }

    #[test]
    fn rejects_bad_rate_matrices() {
        let space = WeightedSpace::unit(2);
        let q = DenseMatrix::from_rows(vec![vec![-1.0, -0.5], vec![1.0, 0.5]]);
        assert!(Semigroup::continuous(space.clone(), q, None).is_err());
        let q = DenseMatrix::from_rows(vec![vec![0.5, 0.0], vec![0.0, 0.0]]);
        assert!(Semigroup::continuous(space, q, None).is_err());
    }
}
