//! Shared oracles and fixtures for the integration tests. Oracles go through
//! independent routes (direct linear solves, closed forms) and never through
//! the orbit machinery they are checking.
#![allow(dead_code)] // each test binary uses its own subset

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use semigroup_lab::numeric::DenseMatrix;
use semigroup_lab::{LatticeVector, PositiveOperator, Semigroup, WeightedSpace};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random column-stochastic matrix with strictly positive entries (hence
/// primitive).
pub fn random_stochastic(rng: &mut ChaCha8Rng, dim: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(dim);
    for j in 0..dim {
        let mut col: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.05..1.0)).collect();
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

pub fn discrete_semigroup(space: Arc<WeightedSpace>, m: DenseMatrix) -> Semigroup {
    Semigroup::discrete(PositiveOperator::dense(space, m).unwrap())
}

/// Stationary density of a column-stochastic matrix by a direct linear solve
/// of `(T - I) x = 0` with the mass normalization row, via LU decomposition.
/// Independent of the power-iteration / orbit route.
pub fn perron_oracle(m: &DenseMatrix, weights: &[f64]) -> LatticeVector {
    let n = m.dim();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = m[(i, j)] - if i == j { 1.0 } else { 0.0 };
        }
    }
    // Replace the last equation with the normalization sum_j w_j x_j = 1.
    for j in 0..n {
        a[(n - 1, j)] = weights[j];
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).expect("primitive stochastic matrix");
    let space = WeightedSpace::new(weights.to_vec(), 1.0).unwrap();
    LatticeVector::new(space, x.iter().copied().collect()).unwrap()
}

/// Block-diagonal matrix of independent primitive stochastic blocks.
pub fn block_diagonal_stochastic(rng: &mut ChaCha8Rng, block_dims: &[usize]) -> DenseMatrix {
    let n: usize = block_dims.iter().sum();
    let mut m = DenseMatrix::zeros(n);
    let mut offset = 0;
    for &b in block_dims {
        let blk = random_stochastic(rng, b);
        for i in 0..b {
            for j in 0..b {
                m[(offset + i, offset + j)] = blk[(i, j)];
            }
        }
        offset += b;
    }
    m
}

/// Random point of the weighted probability simplex `{f >= 0: ||f||_1 = 1}`.
pub fn random_simplex_point(
    rng: &mut ChaCha8Rng,
    space: &Arc<WeightedSpace>,
) -> LatticeVector {
    let entries: Vec<f64> = (0..space.dim()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let f = LatticeVector::new(Arc::clone(space), entries).unwrap();
    let norm = f.al_norm();
    f.scale(1.0 / norm)
}

pub fn random_vector(rng: &mut ChaCha8Rng, space: &Arc<WeightedSpace>, lo: f64, hi: f64) -> LatticeVector {
    let entries: Vec<f64> = (0..space.dim()).map(|_| rng.gen_range(lo..hi)).collect();
    LatticeVector::new(Arc::clone(space), entries).unwrap()
}
