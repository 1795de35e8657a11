//! Small numeric helpers: compensated summation and a dense square matrix.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated accumulator. Error stays O(eps * sum |terms|)
/// independent of the summation order, which the certification tolerances
/// in this crate assume.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of an iterator of terms.
pub fn csum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for t in terms {
        acc.add(t);
    }
    acc.value()
}

/// Dense square matrix, row-major. Used for materialized operators,
/// uniformization and convergence limits; not a general linear-algebra type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in &rows {
            assert_eq!(r.len(), dim, "matrix rows must form a square");
            data.extend_from_slice(r);
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[f64]) {
        assert_eq!(col.len(), self.dim);
        for i in 0..self.dim {
            self[(i, j)] = col[i];
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        self.data
            .chunks(self.dim)
            .map(|row| csum(row.iter().zip(v).map(|(a, x)| a * x)))
            .collect()
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, other.dim);
        DenseMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, other.dim);
        DenseMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let n = self.dim;
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Weighted l1 -> l1 operator norm: max_j sum_i w_i |a_ij| / w_j.
    pub fn weighted_operator_norm(&self, weights: &[f64]) -> f64 {
        assert_eq!(weights.len(), self.dim);
        (0..self.dim)
            .map(|j| {
                csum((0..self.dim).map(|i| weights[i] * self[(i, j)].abs())) / weights[j]
            })
            .fold(0.0, f64::max)
    }

    /// Numerical rank via Gaussian elimination with full column scaling:
    /// counts pivots whose magnitude stays above `threshold` relative to the
    /// largest entry. Deliberately simple; reported alongside the threshold so
    /// borderline cases are auditable.
    pub fn rank(&self, threshold: f64) -> usize {
        let n = self.dim;
        let mut a = self.data.clone();
        let scale = self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return 0;
        }
        let tol = threshold * scale;
        let mut rank = 0;
        let mut row = 0;
        for col in 0..n {
            // partial pivot in this column
            let (mut pi, mut pv) = (row, 0.0f64);
            for i in row..n {
                let v = a[i * n + col].abs();
                if v > pv {
                    pi = i;
                    pv = v;
                }
            }
            if pv <= tol {
                continue;
            }
            if pi != row {
                for j in 0..n {
                    a.swap(row * n + j, pi * n + j);
                }
            }
            let pivot = a[row * n + col];
            for i in (row + 1)..n {
                let f = a[i * n + col] / pivot;
                if f != 0.0 {
                    for j in col..n {
                        a[i * n + j] -= f * a[row * n + j];
                    }
                }
            }
            rank += 1;
            row += 1;
            if row == n {
                break;
            }
        }
        rank
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}
