//! Positive functionals on a weighted space.
//!
//! A functional acts through the measure: `<psi, f> = sum_i psi_i f_i w_i`.
//! The norm functional (all coefficients 1) pairs a nonnegative vector with
//! its AL norm.

use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::numeric::csum;
use crate::space::WeightedSpace;
use crate::vector::LatticeVector;

#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    space: Arc<WeightedSpace>,
    coefficients: Vec<f64>,
}

impl serde::Serialize for Functional {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.coefficients.serialize(serializer)
    }
}

impl Functional {
    pub fn new(space: Arc<WeightedSpace>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != space.dim() {
            return Err(LabError::DimensionMismatch {
                left: coefficients.len(),
                right: space.dim(),
            });
        }
        Ok(Self {
            space,
            coefficients,
        })
    }

    /// The norm functional `1`: `<1, f> = ||f||_1` for `f >= 0`.
    pub fn norm_functional(space: Arc<WeightedSpace>) -> Self {
        let n = space.dim();
        Self {
            space,
            coefficients: vec![1.0; n],
        }
    }

    pub fn space(&self) -> &Arc<WeightedSpace> {
        &self.space
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    #[inline]
    pub fn coefficient(&self, i: usize) -> f64 {
        self.coefficients[i]
    }

    pub fn is_positive(&self) -> bool {
        self.coefficients.iter().all(|&c| c >= 0.0)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.coefficients.iter().all(|&c| c > 0.0)
    }

    /// `<psi, f>` with compensated accumulation.
    pub fn apply(&self, f: &LatticeVector) -> Result<f64> {
        self.space.check_same(f.space())?;
        Ok(csum(
            self.coefficients
                .iter()
                .zip(f.entries())
                .zip(self.space.weights())
                .map(|((c, x), w)| c * x * w),
        ))
    }

    pub fn scale(&self, s: f64) -> Functional {
        Functional {
            space: Arc::clone(&self.space),
            coefficients: self.coefficients.iter().map(|c| s * c).collect(),
        }
    }

    pub fn sub(&self, other: &Functional) -> Result<Functional> {
        self.space.check_same(&other.space)?;
        Ok(Functional {
            space: Arc::clone(&self.space),
            coefficients: self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Functional) -> f64 {
        self.coefficients
            .iter()
            .zip(&other.coefficients)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}
