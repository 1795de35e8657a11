//! Exact constructors for the gallery of named instances the test suites
//! revolve around. Every constructor validates its own closed-form property
//! list before returning.
//!
//! Shift-type instances on a truncated index set couple the usable horizon to
//! the dimension: beyond `dim - 8` steps the escaping spike reaches the
//! boundary and results downgrade to approximate.

use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::exact::{ExactVector, ShiftFeedbackExact, WeightedShiftExact};
use crate::fp::{self, FiniteMap, IntervalMap, UlamOperator};
use crate::functional::Functional;
use crate::operator::PositiveOperator;
use crate::semigroup::Semigroup;
use crate::space::WeightedSpace;
use crate::vector::LatticeVector;

/// Largest horizon at which shift-type orbit formulas stay exact.
pub fn max_exact_horizon(dim: usize) -> usize {
    dim.saturating_sub(8)
}

/// Steps after which an Ulam discretization of an expanding map stops
/// resolving the dynamics (features become sub-cell): `log_slope(cells)`.
pub fn ulam_resolution_horizon(max_abs_slope: f64, cells: usize) -> usize {
    if max_abs_slope <= 1.0 {
        return usize::MAX;
    }
    ((cells as f64).ln() / max_abs_slope.ln()).floor() as usize
}

/// The Markov counterexample with individual but no uniform lower bounds:
/// `T f = <h, f> e_0 + S M f` on truncated l1 with unit weights,
/// `h_k = 2^{-k}`, `M = diag(1 - 2^{-k})`, `S` the right shift.
#[derive(Debug, Clone)]
pub struct ShiftFeedback {
    pub semigroup: Semigroup,
    /// The feedback functional `h`.
    pub h: Functional,
    pub exact: ShiftFeedbackExact,
    pub dim: usize,
}

pub fn build_shift_feedback(dim: usize) -> Result<ShiftFeedback> {
    if dim < 8 {
        return Err(LabError::InvalidConfig("dim must be at least 8".into()));
    }
    let space = WeightedSpace::unit(dim);
    let h_coeffs: Vec<f64> = (0..dim).map(|k| 0.5f64.powi(k as i32)).collect();
    let m_coeffs: Vec<f64> = h_coeffs.iter().map(|h| 1.0 - h).collect();
    let h = Functional::new(Arc::clone(&space), h_coeffs)?;
    let e0 = LatticeVector::basis(Arc::clone(&space), 0);
    let feedback = PositiveOperator::rank_one(h.clone(), e0)?;
    let shift = PositiveOperator::right_shift(Arc::clone(&space));
    let band = PositiveOperator::compose(vec![
        shift,
        PositiveOperator::diagonal(Arc::clone(&space), m_coeffs)?,
    ])?;
    let operator = PositiveOperator::sum(vec![feedback, band])?;

    // Self-validation: exact Markov columns (dyadic arithmetic), fixed e_0,
    // and agreement with the exact orbit over the first steps.
    if !operator.is_markov(0.0) {
        return Err(LabError::InvalidOperator(
            "shift-feedback columns must sum to 1 exactly".into(),
        ));
    }
    let e0 = LatticeVector::basis(Arc::clone(&space), 0);
    if operator.apply(&e0)?.max_abs_diff(&e0) != 0.0 {
        return Err(LabError::InvalidOperator("e_0 must be fixed".into()));
    }
    let exact = ShiftFeedbackExact::new(dim);
    let mut float_f = LatticeVector::basis(Arc::clone(&space), 1);
    let mut exact_f = ExactVector::basis(dim, 1);
    for n in 1..=8.min(dim - 2) {
        float_f = operator.apply(&float_f)?;
        exact_f = exact.step(&exact_f).0;
        let exact_float = LatticeVector::new(Arc::clone(&space), exact_f.to_f64())?;
        if float_f.max_abs_diff(&exact_float) > 1e-12 {
            return Err(LabError::InvalidOperator(format!(
                "float orbit deviates from the exact orbit at step {n}"
            )));
        }
    }

    Ok(ShiftFeedback {
        semigroup: Semigroup::discrete(operator).with_bound_hint(1.0),
        h,
        exact,
        dim,
    })
}

/// The idempotent rank-one projection `T = h ⊗ e_0` with `h_k = 2^{-k}`:
/// its adjoint is a lattice homomorphism, it converges to itself, but the
/// limit columns have no uniform norm floor.
#[derive(Debug, Clone)]
pub struct RankOneProjection {
    pub semigroup: Semigroup,
    pub operator: PositiveOperator,
    pub h: Functional,
    pub dim: usize,
}

pub fn build_rank_one_projection(dim: usize) -> Result<RankOneProjection> {
    if dim < 8 {
        return Err(LabError::InvalidConfig("dim must be at least 8".into()));
    }
    let space = WeightedSpace::unit(dim);
    let h_coeffs: Vec<f64> = (0..dim).map(|k| 0.5f64.powi(k as i32)).collect();
    let h = Functional::new(Arc::clone(&space), h_coeffs)?;
    let target = LatticeVector::basis(Arc::clone(&space), 0);
    let operator = PositiveOperator::rank_one(h.clone(), target)?;

    // Self-validation: T^2 = T exactly (dyadic pairing) and ||T e_k|| = 2^{-k}.
    for k in 0..dim {
        let e_k = LatticeVector::basis(Arc::clone(&space), k);
        let t1 = operator.apply(&e_k)?;
        let t2 = operator.apply(&t1)?;
        if t1.max_abs_diff(&t2) != 0.0 {
            return Err(LabError::InvalidOperator("projection must be idempotent".into()));
        }
        if t1.al_norm() != 0.5f64.powi(k as i32) {
            return Err(LabError::InvalidOperator(format!(
                "||T e_{k}|| must equal 2^-{k} exactly"
            )));
        }
    }
    if !operator.adjoint_is_lattice_homomorphism() {
        return Err(LabError::InvalidOperator(
            "adjoint of a rank-one map into a basis vector is a lattice homomorphism".into(),
        ));
    }

    Ok(RankOneProjection {
        semigroup: Semigroup::discrete(operator.clone()).with_bound_hint(1.0),
        operator,
        h,
        dim,
    })
}

/// The weighted-shift instance on `l^p(mu)`, `mu({0}) = 1`,
/// `mu({k}) = k^{-p}`: power-bounded with conserved tail p-norm (hence not
/// strongly convergent in `l^p`), yet strongly convergent to `psi_1 ⊗ e_0` in
/// the l1 envelope. Exposes both the native space and the envelope, and the
/// strictly positive functional `psi` (the envelope norm functional).
#[derive(Debug, Clone)]
pub struct WeightedShift {
    /// Semigroup on the native l^p space.
    pub native: Semigroup,
    /// The same operator on the l1 envelope (same weights, p = 1).
    pub envelope: Semigroup,
    /// The envelope norm functional restricted to the native space.
    pub psi: Functional,
    pub exact: WeightedShiftExact,
    pub dim: usize,
    pub p: f64,
}

pub fn build_weighted_shift(dim: usize, p: f64) -> Result<WeightedShift> {
    if dim < 16 {
        return Err(LabError::InvalidConfig("dim must be at least 16".into()));
    }
    if !(p > 1.0) {
        return Err(LabError::InvalidConfig(format!("p must exceed 1, got {p}")));
    }
    let weights: Vec<f64> = (0..dim)
        .map(|k| if k == 0 { 1.0 } else { (k as f64).powf(-p) })
        .collect();
    let native_space = WeightedSpace::new(weights.clone(), p)?;
    let envelope_space = WeightedSpace::new(weights, 1.0)?;

    let build_on = |space: &Arc<WeightedSpace>| -> Result<PositiveOperator> {
        let alpha: Vec<f64> = (0..dim)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    (k as f64 / (k as f64 + 1.0)).powf(p - 1.0)
                }
            })
            .collect();
        let head_coeffs: Vec<f64> = alpha.iter().map(|a| 1.0 - a).collect();
        let head = PositiveOperator::rank_one(
            Functional::new(Arc::clone(space), head_coeffs)?,
            LatticeVector::basis(Arc::clone(space), 0),
        )?;
        let band: Vec<(usize, usize, f64)> = (2..dim)
            .map(|k| (k, k - 1, k as f64 / (k as f64 - 1.0)))
            .collect();
        let band = PositiveOperator::sparse(Arc::clone(space), band)?;
        let mut escape = vec![0.0; dim];
        let n = dim as f64;
        escape[dim - 1] = n / (n - 1.0) * n.powf(-p);
        PositiveOperator::sum(vec![head, band])?.with_escape(escape)
    };

    let native_op = build_on(&native_space)?;
    let envelope_op = build_on(&envelope_space)?;
    let psi = Functional::norm_functional(Arc::clone(&native_space));

    // Self-validation on the envelope: Markov with escape, psi fixed under
    // the adjoint, e_0 fixed, and the tail shift formula for a few steps.
    if !envelope_op.is_markov(1e-12) {
        return Err(LabError::InvalidOperator(
            "weighted shift must be Markov on the l1 envelope (with escape)".into(),
        ));
    }
    let one = Functional::norm_functional(Arc::clone(&envelope_space));
    let adj = envelope_op.adjoint_apply(&one)?;
    // T' 1 = 1 holds up to the truncated last column.
    for j in 0..dim - 1 {
        if (adj.coefficient(j) - 1.0).abs() > 1e-12 {
            return Err(LabError::InvalidOperator(format!(
                "norm functional must be fixed; deviation at column {j}"
            )));
        }
    }
    let e0 = LatticeVector::basis(Arc::clone(&envelope_space), 0);
    if envelope_op.apply(&e0)?.max_abs_diff(&e0) != 0.0 {
        return Err(LabError::InvalidOperator("e_0 must be fixed".into()));
    }
    let e2 = LatticeVector::basis(Arc::clone(&envelope_space), 2);
    let mut cur = e2;
    for n in 1..=6.min(dim - 4) {
        cur = envelope_op.apply(&cur)?;
        let expected = 2.0 + n as f64;
        if (cur.get(2 + n) - expected / 2.0).abs() > 1e-12 {
            return Err(LabError::InvalidOperator(format!(
                "tail shift coefficient wrong at step {n}"
            )));
        }
    }

    Ok(WeightedShift {
        native: Semigroup::discrete(native_op),
        envelope: Semigroup::discrete(envelope_op).with_bound_hint(1.0),
        psi,
        exact: WeightedShiftExact::new(dim, p as u32),
        dim,
        p,
    })
}

/// Frobenius-Perron operator of the two-point collapse `sigma = const 0` on
/// counting weights: a constant (hence operator-norm convergent) semigroup of
/// FP operators whose map is not measure preserving and whose limit is not
/// the identity.
pub fn build_two_point_collapse() -> Result<(Semigroup, PositiveOperator)> {
    let space = WeightedSpace::unit(2);
    let map = FiniteMap::new(vec![0, 0], Arc::clone(&space))?;
    let op = fp::fp_of_finite_map(&map);
    let m = op.to_dense()?;
    if m.data() != [1.0, 1.0, 0.0, 0.0] {
        return Err(LabError::InvalidOperator(
            "two-point collapse matrix must be [[1,1],[0,0]]".into(),
        ));
    }
    if fp::is_measure_preserving(&op, 1e-15) {
        return Err(LabError::InvalidOperator(
            "two-point collapse must not preserve the counting measure".into(),
        ));
    }
    Ok((Semigroup::discrete(op.clone()).with_bound_hint(2.0), op))
}

/// Non-positive rotation semigroup on R^2 with the given period; quarantined
/// behind the positivity-exempt flag and admitted only to the
/// embedded-discrete consistency diagnostics.
pub fn build_rotation(period: f64) -> Result<Semigroup> {
    Semigroup::rotation(period)
}

/// Cyclic permutation on `dim` points (counting weights): measure preserving,
/// periodic, not convergent in any mode.
pub fn build_cyclic_permutation(dim: usize) -> Result<Semigroup> {
    let space = WeightedSpace::unit(dim);
    let sigma: Vec<usize> = (0..dim).map(|j| (j + 1) % dim).collect();
    let op = fp::fp_of_finite_map(&FiniteMap::new(sigma, space)?);
    Ok(Semigroup::discrete(op).with_bound_hint(1.0))
}

/// FP operator of `sigma(j) = max(j - 1, 1)` on counting weights: all mass
/// collapses to state 1 and the limit is `1 ⊗ e_1`.
pub fn build_collapse_chain(dim: usize) -> Result<Semigroup> {
    if dim < 3 {
        return Err(LabError::InvalidConfig("dim must be at least 3".into()));
    }
    let space = WeightedSpace::unit(dim);
    let sigma: Vec<usize> = (0..dim).map(|j| j.saturating_sub(1).max(1)).collect();
    let op = fp::fp_of_finite_map(&FiniteMap::new(sigma, space)?);
    Ok(Semigroup::discrete(op).with_bound_hint(1.0))
}

pub fn build_doubling_ulam(cells: usize) -> Result<UlamOperator> {
    fp::ulam_matrix(&IntervalMap::doubling(), cells)
}

pub fn build_tent_ulam(cells: usize) -> Result<UlamOperator> {
    fp::ulam_matrix(&IntervalMap::tent(), cells)
}

pub fn build_identity(dim: usize) -> Result<Semigroup> {
    let space = WeightedSpace::unit(dim);
    Ok(Semigroup::discrete(PositiveOperator::identity(space)).with_bound_hint(1.0))
}

/// Catalogue entry for the command-line gallery.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GalleryEntry {
    pub id: &'static str,
    pub description: &'static str,
    pub default_dim: usize,
}

pub fn gallery_list() -> Vec<GalleryEntry> {
    vec![
        GalleryEntry {
            id: "shift-feedback",
            description: "Markov shift with rank-one feedback: individual lower bounds exist, no uniform bound, no convergence",
            default_dim: 64,
        },
        GalleryEntry {
            id: "rank-one-projection",
            description: "idempotent h ⊗ e_0 with lattice-homomorphism adjoint; converges to itself with vanishing column floors",
            default_dim: 32,
        },
        GalleryEntry {
            id: "weighted-shift",
            description: "power-bounded weighted shift on l^p(mu): psi-bounds exist, native convergence fails, l1 envelope converges",
            default_dim: 400,
        },
        GalleryEntry {
            id: "two-point-collapse",
            description: "constant FP semigroup of a non-measure-preserving two-point map; norm convergent, limit != identity",
            default_dim: 2,
        },
        GalleryEntry {
            id: "rotation",
            description: "periodic rotation semigroup on R^2 (positivity exempt); embedded-at-period converges, full does not",
            default_dim: 2,
        },
        GalleryEntry {
            id: "doubling-ulam",
            description: "Ulam matrix of the doubling map on a dyadic grid; measure preserving, not norm convergent within resolution",
            default_dim: 256,
        },
        GalleryEntry {
            id: "tent-ulam",
            description: "Ulam matrix of the tent map; exact Markov partition with uniform invariant density",
            default_dim: 256,
        },
        GalleryEntry {
            id: "cyclic-permutation",
            description: "cyclic shift permutation; measure preserving and periodic",
            default_dim: 8,
        },
        GalleryEntry {
            id: "collapse-chain",
            description: "FP operator of sigma(j) = max(j-1, 1); Ding-certifiable with limit 1 ⊗ e_1",
            default_dim: 100,
        },
        GalleryEntry {
            id: "identity",
            description: "identity semigroup; converges to a limit of full rank",
            default_dim: 8,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::NormKind;

    #[test]
    fn shift_feedback_orbit_matches_formula_in_float() {
        let g = build_shift_feedback(32).unwrap();
        let e1 = LatticeVector::basis(g.semigroup.space().clone(), 1);
        let orbit = g.semigroup.unit_orbit(&e1, 20).unwrap();
        for (n, point) in orbit.points.iter().enumerate() {
            let expected = LatticeVector::new(
                g.semigroup.space().clone(),
                g.exact.orbit_formula_e1(n + 1).to_f64(),
            )
            .unwrap();
            assert!(point.max_abs_diff(&expected) <= 1e-12, "step {}", n + 1);
        }
    }

    #[test]
    fn shift_feedback_vertex_bound_floor() {
        // T^n f >= <h, f> e_0: the pairing is a persistent floor.
        let g = build_shift_feedback(24).unwrap();
        let space = g.semigroup.space().clone();
        let f = LatticeVector::new(space.clone(), {
            let mut v = vec![0.0; 24];
            v[1] = 0.6;
            v[3] = 0.4;
            v
        })
        .unwrap();
        let c_f = g.h.apply(&f).unwrap();
        let floor = LatticeVector::basis(space, 0).scale(c_f);
        let orbit = g.semigroup.unit_orbit(&f, 12).unwrap();
        for p in &orbit.points {
            assert_eq!(p.deficiency(&floor, &NormKind::Al).unwrap(), 0.0);
        }
    }

    #[test]
    fn rank_one_projection_validates() {
        let g = build_rank_one_projection(16).unwrap();
        assert!(g.operator.adjoint_is_lattice_homomorphism());
        assert!(!g.operator.is_lattice_homomorphism());
        assert!((g.operator.weighted_operator_norm().unwrap() - 1.0).abs() == 0.0);
    }

    #[test]
    fn weighted_shift_validates_and_psi_is_fixed() {
        let g = build_weighted_shift(64, 2.0).unwrap();
        let psi_env = Functional::norm_functional(g.envelope.space().clone());
        let adj = g
            .envelope
            .generator()
            .unwrap()
            .adjoint_apply(&psi_env)
            .unwrap();
        for j in 0..63 {
            assert!((adj.coefficient(j) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn gallery_ids_are_unique() {
        let list = gallery_list();
        let mut ids: Vec<_> = list.iter().map(|e| e.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), list.len());
    }
}
