//! Frobenius-Perron operators: exact for finite non-singular maps, via Ulam
//! discretization for piecewise-affine interval maps.
//!
//! Column-stochastic convention throughout: densities are column vectors and
//! `is_markov` asserts the convention everywhere, which keeps the classic
//! transpose bug between Frobenius-Perron and Koopman out of the code base.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{LabError, Result};
use crate::numeric::DenseMatrix;
use crate::operator::{Kernel, PositiveOperator};
use crate::space::WeightedSpace;
use crate::vector::LatticeVector;

/// One branch of an interval map on [0, 1).
#[derive(Clone)]
pub enum Branch {
    /// `x -> slope * x + intercept` on `[domain.0, domain.1)`.
    Affine {
        domain: (f64, f64),
        slope: f64,
        intercept: f64,
    },
    /// A monotone callable branch; accepted by the type but not by the Ulam
    /// builder, which has no quadrature for it.
    Monotone {
        domain: (f64, f64),
        map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl std::fmt::Debug for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Affine {
                domain,
                slope,
                intercept,
            } => write!(f, "Affine({domain:?}, {slope} x + {intercept})"),
            Branch::Monotone { domain, .. } => write!(f, "Monotone({domain:?})"),
        }
    }
}

impl Branch {
    fn domain(&self) -> (f64, f64) {
        match self {
            Branch::Affine { domain, .. } | Branch::Monotone { domain, .. } => *domain,
        }
    }
}

/// A piecewise-defined interval map whose branches partition [0, 1).
#[derive(Debug, Clone)]
pub struct IntervalMap {
    branches: Vec<Branch>,
}

impl IntervalMap {
    pub fn new(mut branches: Vec<Branch>) -> Result<Self> {
        if branches.is_empty() {
            return Err(LabError::InvalidConfig("interval map needs branches".into()));
        }
        branches.sort_by(|a, b| a.domain().0.total_cmp(&b.domain().0));
        let mut cursor = 0.0;
        for b in &branches {
            let (lo, hi) = b.domain();
            if (lo - cursor).abs() > 1e-15 || hi <= lo {
                return Err(LabError::InvalidConfig(format!(
                    "branches must partition [0,1): gap or overlap at {lo}"
                )));
            }
            if let Branch::Affine {
                slope, intercept, ..
            } = b
            {
                if *slope == 0.0 {
                    return Err(LabError::InvalidConfig(
                        "affine branch must be injective (slope != 0)".into(),
                    ));
                }
                // The push-forward is only defined for maps into [0, 1].
                for x in [lo, hi] {
                    let y = slope * x + intercept;
                    if !(-1e-12..=1.0 + 1e-12).contains(&y) {
                        return Err(LabError::InvalidConfig(format!(
                            "branch image leaves [0,1]: phi({x}) = {y}"
                        )));
                    }
                }
            }
            cursor = hi;
        }
        if (cursor - 1.0).abs() > 1e-15 {
            return Err(LabError::InvalidConfig(format!(
                "branches end at {cursor}, expected 1"
            )));
        }
        Ok(Self { branches })
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// The doubling map `x -> 2x mod 1`.
    pub fn doubling() -> Self {
        Self::new(vec![
            Branch::Affine {
                domain: (0.0, 0.5),
                slope: 2.0,
                intercept: 0.0,
            },
            Branch::Affine {
                domain: (0.5, 1.0),
                slope: 2.0,
                intercept: -1.0,
            },
        ])
        .expect("doubling map is valid")
    }

    /// The tent map `x -> 1 - |2x - 1|`.
    pub fn tent() -> Self {
        Self::new(vec![
            Branch::Affine {
                domain: (0.0, 0.5),
                slope: 2.0,
                intercept: 0.0,
            },
            Branch::Affine {
                domain: (0.5, 1.0),
                slope: -2.0,
                intercept: 2.0,
            },
        ])
        .expect("tent map is valid")
    }

    pub fn identity() -> Self {
        Self::new(vec![Branch::Affine {
            domain: (0.0, 1.0),
            slope: 1.0,
            intercept: 0.0,
        }])
        .expect("identity map is valid")
    }
}

/// A total map on a finite index set with strictly positive weights;
/// non-singularity is automatic.
#[derive(Debug, Clone)]
pub struct FiniteMap {
    sigma: Vec<usize>,
    space: Arc<WeightedSpace>,
}

impl FiniteMap {
    pub fn new(sigma: Vec<usize>, space: Arc<WeightedSpace>) -> Result<Self> {
        if sigma.len() != space.dim() {
            return Err(LabError::DimensionMismatch {
                left: sigma.len(),
                right: space.dim(),
            });
        }
        if let Some(&bad) = sigma.iter().find(|&&i| i >= space.dim()) {
            return Err(LabError::InvalidConfig(format!(
                "map image {bad} out of range"
            )));
        }
        Ok(Self { sigma, space })
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn space(&self) -> &Arc<WeightedSpace> {
        &self.space
    }
}

/// Result of the Ulam discretization.
#[derive(Debug, Clone)]
pub struct UlamOperator {
    pub operator: PositiveOperator,
    /// Exactness claim: branch endpoints lie on the cell grid and slopes and
    /// intercepts are grid-compatible (a Markov partition), so piecewise
    /// constant densities are mapped without projection error. Anything else
    /// is an approximation and every downstream report must carry the flag.
    pub exact_markov_partition: bool,
    pub cells: usize,
}

fn big(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite f64 is an exact dyadic rational")
}

/// Ulam matrix of a piecewise-affine interval map on the uniform partition of
/// [0, 1) into `n_cells` cells: `T_ij = m(phi^{-1}(A_i) ∩ A_j) / m(A_j)`,
/// computed with exact rational interval intersections (every finite f64 is
/// a rational, so there is no rounding until the final entry conversion).
pub fn ulam_matrix(map: &IntervalMap, n_cells: usize) -> Result<UlamOperator> {
    if n_cells < 2 {
        return Err(LabError::InvalidConfig("need at least 2 cells".into()));
    }
    let n_big = BigRational::from_integer(BigInt::from(n_cells));
    let cell = n_big.recip();
    let mut triplets: Vec<(usize, usize, BigRational)> = Vec::new();
    let mut exact = true;

    for branch in &map.branches {
        let Branch::Affine {
            domain,
            slope,
            intercept,
        } = branch
        else {
            return Err(LabError::UnsupportedBranch(
                "monotone callable branch without a supplied quadrature".into(),
            ));
        };
        let (lo, hi) = (big(domain.0), big(domain.1));
        let s = big(*slope);
        let c = big(*intercept);
        // Markov-partition exactness: endpoints on the grid, integral slope,
        // grid-compatible intercept.
        exact &= (&lo * &n_big).is_integer()
            && (&hi * &n_big).is_integer()
            && s.is_integer()
            && (&c * &n_big).is_integer();

        // March over source cells intersecting the branch domain.
        let j_start = (&lo * &n_big).floor().to_integer().to_usize().unwrap_or(0);
        let mut j = j_start;
        while j < n_cells {
            let a_j_lo = BigRational::from_integer(BigInt::from(j)) * &cell;
            let a_j_hi = &a_j_lo + &cell;
            if a_j_lo >= hi {
                break;
            }
            let seg_lo = if a_j_lo > lo { a_j_lo.clone() } else { lo.clone() };
            let seg_hi = if a_j_hi < hi { a_j_hi.clone() } else { hi.clone() };
            if seg_hi > seg_lo {
                // Image of the segment under the branch, ordered.
                let img_a = &s * &seg_lo + &c;
                let img_b = &s * &seg_hi + &c;
                let (img_lo, img_hi) = if img_a <= img_b {
                    (img_a, img_b)
                } else {
                    (img_b, img_a)
                };
                let abs_slope = s.abs();
                // Distribute over target cells.
                let i_start = (&img_lo * &n_big)
                    .floor()
                    .to_integer()
                    .to_usize()
                    .unwrap_or(0);
                let mut i = i_start.min(n_cells - 1);
                loop {
                    let a_i_lo = BigRational::from_integer(BigInt::from(i)) * &cell;
                    let a_i_hi = &a_i_lo + &cell;
                    if a_i_lo >= img_hi {
                        break;
                    }
                    let o_lo = if a_i_lo > img_lo { a_i_lo } else { img_lo.clone() };
                    let o_hi = if a_i_hi < img_hi { a_i_hi } else { img_hi.clone() };
                    if o_hi > o_lo {
                        // preimage length / m(A_j) = (overlap / |s|) * n
                        let mass = (&o_hi - &o_lo) / &abs_slope * &n_big;
                        triplets.push((i.min(n_cells - 1), j, mass));
                    }
                    i += 1;
                    if i >= n_cells {
                        break;
                    }
                }
            }
            j += 1;
        }
    }

    // Merge duplicate (i, j) rationally, check column sums, convert to f64.
    let mut merged = std::collections::BTreeMap::<(usize, usize), BigRational>::new();
    for (i, j, v) in triplets {
        *merged.entry((i, j)).or_insert_with(BigRational::zero) += v;
    }
    let mut col_sums = vec![BigRational::zero(); n_cells];
    for ((_, j), v) in &merged {
        col_sums[*j] += v;
    }
    for (j, s) in col_sums.iter().enumerate() {
        let defect = (s - BigRational::one()).abs();
        if !defect.is_zero() {
            // Float-specified branches can leave slivers of ~1e-16; anything
            // larger means the branches do not cover [0,1).
            if defect > big(1e-12) {
                return Err(LabError::InvalidOperator(format!(
                    "ulam column {j} sums to {s}, expected 1: the map does not cover [0,1)"
                )));
            }
            exact = false;
        }
    }
    let space = WeightedSpace::new(vec![1.0 / n_cells as f64; n_cells], 1.0)?;
    let fl: Vec<(usize, usize, f64)> = merged
        .into_iter()
        .map(|((i, j), v)| (i, j, v.to_f64().expect("cell masses are representable")))
        .collect();
    let operator = PositiveOperator::sparse(space, fl)?;
    debug_assert!(operator.is_markov(1e-12));
    Ok(UlamOperator {
        operator,
        exact_markov_partition: exact,
        cells: n_cells,
    })
}

/// Frobenius-Perron operator of a finite map: the transport kernel with
/// gains `w_j / w_{sigma(j)}`, so that `(Tf)(i) w_i = sum_{sigma(j)=i} f_j w_j`.
/// Markov by construction; the adjoint is the Koopman operator `g -> g ∘ sigma`
/// and a lattice homomorphism.
pub fn fp_of_finite_map(map: &FiniteMap) -> PositiveOperator {
    let space = Arc::clone(&map.space);
    let gains: Vec<f64> = map
        .sigma
        .iter()
        .enumerate()
        .map(|(j, &i)| space.weight(j) / space.weight(i))
        .collect();
    let op = PositiveOperator::transport(space, map.sigma.clone(), gains)
        .expect("validated map yields a valid transport kernel");
    debug_assert!(op.is_markov(1e-12));
    debug_assert!(op.adjoint_is_lattice_homomorphism());
    op
}

/// The Koopman operator (the adjoint acting on dual coefficient vectors).
/// For a transport kernel this is exactly `g -> g ∘ sigma`; for other
/// materializable kernels it is the weighted transpose.
pub fn koopman(t: &PositiveOperator) -> Result<PositiveOperator> {
    let space = Arc::clone(t.space());
    let n = space.dim();
    match t.kernel() {
        Kernel::Transport { sigma, gains } => {
            let triplets: Vec<(usize, usize, f64)> = (0..n)
                .map(|j| {
                    (
                        j,
                        sigma[j],
                        gains[j] * space.weight(sigma[j]) / space.weight(j),
                    )
                })
                .collect();
            PositiveOperator::sparse(space, triplets)
        }
        _ => {
            let m = t.to_dense()?;
            let mut k = DenseMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    k[(j, i)] = m[(i, j)] * space.weight(i) / space.weight(j);
                }
            }
            PositiveOperator::dense(space, k)
        }
    }
}

/// Measure preservation of an FP-type operator: the constant-one density is
/// fixed within `tol` in the sup norm.
pub fn is_measure_preserving(t: &PositiveOperator, tol: f64) -> bool {
    let ones = LatticeVector::ones(Arc::clone(t.space()));
    match t.apply(&ones) {
        Ok(img) => img.max_abs_diff(&ones) <= tol,
        Err(_) => false,
    }
}

/// Power iteration until the successive AL distance drops below `tol`;
/// returns the normalized fixed density. Non-convergence within `max_iter`
/// steps is an error signalling periodicity or non-ergodicity, not a bug.
///
/// The start is the uniform density with a deterministic spike at index 0:
/// a merely-fixed uniform density (a permutation fixes it without attracting
/// anything) must not be mistaken for the limit density of a convergent
/// semigroup.
pub fn invariant_density(
    t: &PositiveOperator,
    tol: f64,
    max_iter: usize,
) -> Result<LatticeVector> {
    let space = Arc::clone(t.space());
    let start = LatticeVector::ones(Arc::clone(&space))
        .add(&LatticeVector::basis(Arc::clone(&space), 0).scale(1.0 / space.weight(0)))?;
    let mut f = start.scale(1.0 / start.al_norm());
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let next = t.apply(&f)?;
        residual = next.sub(&f)?.al_norm();
        f = next;
        if residual <= tol {
            let norm = f.al_norm();
            return Ok(f.scale(1.0 / norm));
        }
    }
    Err(LabError::NonConvergence { max_iter, residual })
}
