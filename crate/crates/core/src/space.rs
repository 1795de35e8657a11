//! Weighted index spaces: the discrete measure underlying every norm here.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numeric::csum;

/// A finite index set `{0, .., dim-1}` with strictly positive weights
/// `w_i = mu({i})` and an exponent `p >= 1`. With `p = 1` the space is the
/// weighted l1 space (AL mode); every norm and pairing in the crate is taken
/// with respect to this measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedSpace {
    weights: Vec<f64>,
    p: f64,
}

impl WeightedSpace {
    pub fn new(weights: Vec<f64>, p: f64) -> Result<Arc<Self>> {
        if weights.is_empty() {
            return Err(LabError::InvalidSpace("dim must be >= 1".into()));
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err(LabError::InvalidSpace(format!("p must be >= 1, got {p}")));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(LabError::InvalidSpace(format!(
                    "weight[{i}] = {w} is not strictly positive and finite"
                )));
            }
        }
        let total = csum(weights.iter().copied());
        if !total.is_finite() {
            return Err(LabError::InvalidSpace("total mass overflows".into()));
        }
        Ok(Arc::new(Self { weights, p }))
    }

    /// Counting measure (unit weights) in AL mode: plain l1 of dimension `dim`.
    pub fn unit(dim: usize) -> Arc<Self> {
        Self::new(vec![1.0; dim], 1.0).expect("unit space is always valid")
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn p_exponent(&self) -> f64 {
        self.p
    }

    /// AL mode: the norm is additive on the positive cone.
    pub fn is_al(&self) -> bool {
        self.p == 1.0
    }

    pub fn total_mass(&self) -> f64 {
        csum(self.weights.iter().copied())
    }

    /// Same measure, exponent forced to 1: the l1 envelope of this space.
    pub fn l1_envelope(self: &Arc<Self>) -> Arc<Self> {
        if self.is_al() {
            Arc::clone(self)
        } else {
            WeightedSpace::new(self.weights.clone(), 1.0).expect("weights already validated")
        }
    }

    pub fn same_as(&self, other: &WeightedSpace) -> bool {
        self.p == other.p && self.weights == other.weights
    }

    pub fn check_same(&self, other: &WeightedSpace) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(LabError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        if !self.same_as(other) {
            return Err(LabError::InvalidSpace(
                "vectors live on different weighted spaces".into(),
            ));
        }
        Ok(())
    }
}

impl PartialEq for WeightedSpace {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_weights() {
        assert!(WeightedSpace::new(vec![], 1.0).is_err());
        assert!(WeightedSpace::new(vec![1.0, 0.0], 1.0).is_err());
        assert!(WeightedSpace::new(vec![1.0, -2.0], 1.0).is_err());
        assert!(WeightedSpace::new(vec![1.0], 0.5).is_err());
        assert!(WeightedSpace::new(vec![f64::INFINITY], 1.0).is_err());
    }

    #[test]
    fn unit_space_is_al() {
        let s = WeightedSpace::unit(4);
        assert!(s.is_al());
        assert_eq!(s.total_mass(), 4.0);
    }
}
