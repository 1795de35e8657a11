//! Vectors over a weighted space with the lattice operations and norms the
//! convergence criteria are phrased in.

use std::sync::Arc;

use crate::error::Result;
use crate::functional::Functional;
use crate::numeric::csum;
use crate::space::WeightedSpace;

/// Which norm a deficiency is measured in.
#[derive(Debug, Clone)]
pub enum NormKind {
    /// Weighted l1 norm (the AL norm).
    Al,
    /// Weighted lp norm of the vector's space.
    P,
    /// `psi`-weighted l1 norm `<psi, |f|>` for a strictly positive functional.
    Psi(Functional),
}

/// Coordinate vector over a [`WeightedSpace`]. Immutable value semantics:
/// every operation returns a fresh vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeVector {
    space: Arc<WeightedSpace>,
    entries: Vec<f64>,
}

// Vectors serialize as plain JSON arrays; the space travels separately.
impl serde::Serialize for LatticeVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries.serialize(serializer)
    }
}

impl LatticeVector {
    pub fn new(space: Arc<WeightedSpace>, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != space.dim() {
            return Err(crate::error::LabError::DimensionMismatch {
                left: entries.len(),
                right: space.dim(),
            });
        }
        Ok(Self { space, entries })
    }

    pub fn zeros(space: Arc<WeightedSpace>) -> Self {
        let n = space.dim();
        Self {
            space,
            entries: vec![0.0; n],
        }
    }

    pub fn ones(space: Arc<WeightedSpace>) -> Self {
        let n = space.dim();
        Self {
            space,
            entries: vec![1.0; n],
        }
    }

    /// k-th canonical unit vector.
    pub fn basis(space: Arc<WeightedSpace>, k: usize) -> Self {
        let mut v = Self::zeros(space);
        v.entries[k] = 1.0;
        v
    }

    pub fn space(&self) -> &Arc<WeightedSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.entries[i]
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.iter().all(|&x| x >= 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0.0)
    }

    /// All entries strictly positive: a quasi-interior point of the cone.
    pub fn is_quasi_interior(&self) -> bool {
        self.entries.iter().all(|&x| x > 0.0)
    }

    /// Splits into the positive and negative parts: `f = pos - neg`,
    /// `pos_i = max(f_i, 0)`, `neg_i = max(-f_i, 0)`, `pos /\ neg = 0`.
    pub fn decompose(&self) -> (LatticeVector, LatticeVector) {
        let pos = self.map(|x| x.max(0.0));
        let neg = self.map(|x| (-x).max(0.0));
        (pos, neg)
    }

    pub fn abs(&self) -> LatticeVector {
        self.map(f64::abs)
    }

    /// Coordinatewise maximum.
    pub fn join(&self, other: &LatticeVector) -> Result<LatticeVector> {
        self.space.check_same(&other.space)?;
        Ok(self.zip(other, f64::max))
    }

    /// Coordinatewise minimum.
    pub fn meet(&self, other: &LatticeVector) -> Result<LatticeVector> {
        self.space.check_same(&other.space)?;
        Ok(self.zip(other, f64::min))
    }

    pub fn add(&self, other: &LatticeVector) -> Result<LatticeVector> {
        self.space.check_same(&other.space)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &LatticeVector) -> Result<LatticeVector> {
        self.space.check_same(&other.space)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    pub fn scale(&self, s: f64) -> LatticeVector {
        self.map(|x| s * x)
    }

    /// Coordinatewise `self <= other`.
    pub fn le(&self, other: &LatticeVector) -> bool {
        self.entries
            .iter()
            .zip(&other.entries)
            .all(|(a, b)| a <= b)
    }

    /// Weighted l1 norm; additive on the positive cone.
    pub fn al_norm(&self) -> f64 {
        csum(
            self.entries
                .iter()
                .zip(self.space.weights())
                .map(|(x, w)| w * x.abs()),
        )
    }

    /// Weighted lp norm with the space's own exponent.
    pub fn p_norm(&self) -> f64 {
        let p = self.space.p_exponent();
        if p == 1.0 {
            return self.al_norm();
        }
        csum(
            self.entries
                .iter()
                .zip(self.space.weights())
                .map(|(x, w)| w * x.abs().powf(p)),
        )
        .powf(1.0 / p)
    }

    /// `<psi, |f|>`; a norm when `psi` is strictly positive.
    pub fn psi_norm(&self, psi: &Functional) -> Result<f64> {
        psi.apply(&self.abs())
    }

    pub fn norm(&self, kind: &NormKind) -> Result<f64> {
        match kind {
            NormKind::Al => Ok(self.al_norm()),
            NormKind::P => Ok(self.p_norm()),
            NormKind::Psi(psi) => self.psi_norm(psi),
        }
    }

    /// `||(f - h)^-||` under the selected norm: zero iff `f >= h`.
    /// This is the quantity whose vanishing along an orbit defines a lower
    /// bound.
    pub fn deficiency(&self, h: &LatticeVector, kind: &NormKind) -> Result<f64> {
        self.space.check_same(&h.space)?;
        let (_, neg) = self.sub(h)?.decompose();
        neg.norm(kind)
    }

    /// Sup-norm distance, used by structural checks.
    pub fn max_abs_diff(&self, other: &LatticeVector) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> LatticeVector {
        LatticeVector {
            space: Arc::clone(&self.space),
            entries: self.entries.iter().map(|&x| f(x)).collect(),
        }
    }

    fn zip(&self, other: &LatticeVector, f: impl Fn(f64, f64) -> f64) -> LatticeVector {
        LatticeVector {
            space: Arc::clone(&self.space),
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}
