//! Structured positive operators on a weighted space.
//!
//! Kernels stay in structured form (shift, diagonal, transport, rank-one,
//! sums and compositions) and are applied lazily; dense materialization is
//! capped. Structural checks (Markov, lattice homomorphism) gate the
//! theorem-level certifiers and are decided on the sparsity pattern, never on
//! value thresholds: an entry stored as 0.0 is absent.

use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::functional::Functional;
use crate::numeric::{csum, DenseMatrix};
use crate::space::WeightedSpace;
use crate::vector::LatticeVector;

/// Default cap for dense materialization; see [`PositiveOperator::to_dense_with_cap`].
pub const DENSE_CAP: usize = 4096;

#[derive(Debug, Clone)]
pub enum Kernel {
    Dense(DenseMatrix),
    /// COO triplets `(row, col, value)`.
    Sparse(Vec<(usize, usize, f64)>),
    /// `(phi ⊗ f) g = <phi, g> f`.
    RankOne {
        functional: Functional,
        vector: LatticeVector,
    },
    /// `(S f)_i = f_{i-1}`; the last coordinate leaks past the truncation.
    RightShift,
    /// Coordinatewise multiplication.
    Diagonal(Vec<f64>),
    /// `(T f)_i = sum_{j: sigma(j) = i} a_j f_j`: one structural nonzero per
    /// column. Frobenius-Perron operators of finite maps land here.
    Transport { sigma: Vec<usize>, gains: Vec<f64> },
    Sum(Vec<PositiveOperator>),
    /// `Compose([A, B]) f = A (B f)` (matrix-product order).
    Compose(Vec<PositiveOperator>),
}

/// A (structurally) nonnegative linear map on a weighted space, together with
/// an optional per-column account of AL mass that a truncated
/// infinite-dimensional original would push past the last index.
#[derive(Debug, Clone)]
pub struct PositiveOperator {
    space: Arc<WeightedSpace>,
    kernel: Kernel,
    /// `escape[j]` = AL norm leaked past the boundary per unit of `|f_j|`.
    escape: Vec<f64>,
    /// Set only for the quarantined non-positive gallery instances (the
    /// rotation semigroup); positivity invariants skip such operators.
    positivity_exempt: bool,
}

impl PositiveOperator {
    fn build(space: Arc<WeightedSpace>, kernel: Kernel) -> Self {
        let n = space.dim();
        Self {
            space,
            kernel,
            escape: vec![0.0; n],
            positivity_exempt: false,
        }
    }

    pub fn dense(space: Arc<WeightedSpace>, matrix: DenseMatrix) -> Result<Self> {
        if matrix.dim() != space.dim() {
            return Err(LabError::DimensionMismatch {
                left: matrix.dim(),
                right: space.dim(),
            });
        }
        if matrix.data().iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(LabError::InvalidOperator(
                "dense kernel has a negative or non-finite entry".into(),
            ));
        }
        Ok(Self::build(space, Kernel::Dense(matrix)))
    }

    /// Dense kernel that may carry negative entries. Reserved for the
    /// quarantined rotation semigroup; every positivity check skips it.
    pub fn dense_positivity_exempt(space: Arc<WeightedSpace>, matrix: DenseMatrix) -> Result<Self> {
        if matrix.dim() != space.dim() {
            return Err(LabError::DimensionMismatch {
                left: matrix.dim(),
                right: space.dim(),
            });
        }
        let mut op = Self::build(space, Kernel::Dense(matrix));
        op.positivity_exempt = true;
        Ok(op)
    }

    pub fn sparse(space: Arc<WeightedSpace>, triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        let n = space.dim();
        for &(i, j, v) in &triplets {
            if i >= n || j >= n {
                return Err(LabError::InvalidOperator(format!(
                    "triplet ({i},{j}) out of range for dim {n}"
                )));
            }
            if v < 0.0 || !v.is_finite() {
                return Err(LabError::InvalidOperator(format!(
                    "triplet ({i},{j}) has invalid value {v}"
                )));
            }
        }
        Ok(Self::build(space, Kernel::Sparse(triplets)))
    }

    pub fn rank_one(functional: Functional, vector: LatticeVector) -> Result<Self> {
        functional.space().check_same(vector.space())?;
        if !functional.is_positive() || !vector.is_nonnegative() {
            return Err(LabError::InvalidOperator(
                "rank-one kernel requires nonnegative functional and vector".into(),
            ));
        }
        let space = Arc::clone(vector.space());
        Ok(Self::build(space, Kernel::RankOne { functional, vector }))
    }

    /// Right shift with default escape accounting: the leaked coordinate is
    /// weighted like the last in-range index. Gallery constructors override
    /// this when the untruncated weights are known.
    pub fn right_shift(space: Arc<WeightedSpace>) -> Self {
        let n = space.dim();
        let w_last = space.weight(n - 1);
        let mut op = Self::build(space, Kernel::RightShift);
        op.escape[n - 1] = w_last;
        op
    }

    pub fn diagonal(space: Arc<WeightedSpace>, multiplier: Vec<f64>) -> Result<Self> {
        if multiplier.len() != space.dim() {
            return Err(LabError::DimensionMismatch {
                left: multiplier.len(),
                right: space.dim(),
            });
        }
        if multiplier.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(LabError::InvalidOperator(
                "diagonal kernel has a negative or non-finite entry".into(),
            ));
        }
        Ok(Self::build(space, Kernel::Diagonal(multiplier)))
    }

    pub fn identity(space: Arc<WeightedSpace>) -> Self {
        let n = space.dim();
        Self::diagonal(space, vec![1.0; n]).expect("identity is valid")
    }

    pub fn transport(space: Arc<WeightedSpace>, sigma: Vec<usize>, gains: Vec<f64>) -> Result<Self> {
        let n = space.dim();
        if sigma.len() != n || gains.len() != n {
            return Err(LabError::DimensionMismatch {
                left: sigma.len().max(gains.len()),
                right: n,
            });
        }
        if let Some(&bad) = sigma.iter().find(|&&i| i >= n) {
            return Err(LabError::InvalidOperator(format!(
                "transport image {bad} out of range for dim {n}"
            )));
        }
        if gains.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(LabError::InvalidOperator(
                "transport gains must be nonnegative and finite".into(),
            ));
        }
        Ok(Self::build(space, Kernel::Transport { sigma, gains }))
    }

    pub fn sum(terms: Vec<PositiveOperator>) -> Result<Self> {
        Self::combine(terms, Kernel::Sum)
    }

    pub fn compose(factors: Vec<PositiveOperator>) -> Result<Self> {
        Self::combine(factors, Kernel::Compose)
    }

    fn combine(
        children: Vec<PositiveOperator>,
        wrap: fn(Vec<PositiveOperator>) -> Kernel,
    ) -> Result<Self> {
        let first = children
            .first()
            .ok_or_else(|| LabError::InvalidOperator("empty operator list".into()))?;
        let space = Arc::clone(&first.space);
        for c in &children {
            space.check_same(&c.space)?;
        }
        let exempt = children.iter().any(|c| c.positivity_exempt);
        let mut op = Self::build(space, wrap(children));
        op.positivity_exempt = exempt;
        Ok(op)
    }

    /// Replaces the escape account of this operator (not of its children).
    pub fn with_escape(mut self, escape: Vec<f64>) -> Result<Self> {
        if escape.len() != self.space.dim() {
            return Err(LabError::DimensionMismatch {
                left: escape.len(),
                right: self.space.dim(),
            });
        }
        if escape.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(LabError::InvalidOperator(
                "escape account must be nonnegative".into(),
            ));
        }
        self.escape = escape;
        Ok(self)
    }

    pub fn space(&self) -> &Arc<WeightedSpace> {
        &self.space
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn is_positivity_exempt(&self) -> bool {
        self.positivity_exempt
    }

    pub fn escape(&self) -> &[f64] {
        &self.escape
    }

    pub fn has_escape(&self) -> bool {
        self.escape.iter().any(|&e| e > 0.0) || self.children().iter().any(|c| c.has_escape())
    }

    fn children(&self) -> &[PositiveOperator] {
        match &self.kernel {
            Kernel::Sum(c) | Kernel::Compose(c) => c,
            _ => &[],
        }
    }

    pub fn apply(&self, f: &LatticeVector) -> Result<LatticeVector> {
        Ok(self.apply_tracked(f)?.0)
    }

    /// Applies the operator and reports the AL mass pushed past the
    /// truncation boundary. Checkers treat results as valid only while the
    /// accumulated escape stays below their declared tolerance.
    pub fn apply_tracked(&self, f: &LatticeVector) -> Result<(LatticeVector, f64)> {
        self.space.check_same(f.space())?;
        let n = self.dim();
        let (entries, mut escaped) = match &self.kernel {
            Kernel::Dense(m) => (m.apply(f.entries()), 0.0),
            Kernel::Sparse(triplets) => {
                let mut out = vec![0.0; n];
                for &(i, j, v) in triplets {
                    out[i] += v * f.get(j);
                }
                (out, 0.0)
            }
            Kernel::RankOne { functional, vector } => {
                let c = functional.apply(f)?;
                (vector.entries().iter().map(|&x| c * x).collect(), 0.0)
            }
            Kernel::RightShift => {
                let mut out = vec![0.0; n];
                out[1..n].copy_from_slice(&f.entries()[..n - 1]);
                (out, 0.0)
            }
            Kernel::Diagonal(m) => (
                m.iter().zip(f.entries()).map(|(a, x)| a * x).collect(),
                0.0,
            ),
            Kernel::Transport { sigma, gains } => {
                let mut out = vec![0.0; n];
                for j in 0..n {
                    out[sigma[j]] += gains[j] * f.get(j);
                }
                (out, 0.0)
            }
            Kernel::Sum(terms) => {
                let mut out = vec![0.0; n];
                let mut esc = 0.0;
                for t in terms {
                    let (v, e) = t.apply_tracked(f)?;
                    for (o, x) in out.iter_mut().zip(v.entries()) {
                        *o += x;
                    }
                    esc += e;
                }
                (out, esc)
            }
            Kernel::Compose(factors) => {
                let mut cur = f.clone();
                let mut esc = 0.0;
                for t in factors.iter().rev() {
                    let (v, e) = t.apply_tracked(&cur)?;
                    cur = v;
                    esc += e;
                }
                return Ok((cur, esc + self.own_escape(f)));
            }
        };
        escaped += self.own_escape(f);
        Ok((LatticeVector::new(Arc::clone(&self.space), entries)?, escaped))
    }

    fn own_escape(&self, f: &LatticeVector) -> f64 {
        csum(
            self.escape
                .iter()
                .zip(f.entries())
                .filter(|(e, _)| **e > 0.0)
                .map(|(e, x)| e * x.abs()),
        )
    }

    /// Adjoint action on a functional: `<T' phi, f> = <phi, T f>` for all f.
    pub fn adjoint_apply(&self, phi: &Functional) -> Result<Functional> {
        self.space.check_same(phi.space())?;
        let n = self.dim();
        let w = self.space.weights();
        let coeffs: Vec<f64> = match &self.kernel {
            Kernel::Dense(m) => (0..n)
                .map(|j| csum((0..n).map(|i| phi.coefficient(i) * m[(i, j)] * w[i])) / w[j])
                .collect(),
            Kernel::Sparse(triplets) => {
                let mut out = vec![0.0; n];
                for &(i, j, v) in triplets {
                    out[j] += phi.coefficient(i) * v * w[i] / w[j];
                }
                out
            }
            Kernel::RankOne { functional, vector } => {
                // (phi ⊗ f)' psi = <psi, f> phi
                let c = phi.apply(vector)?;
                functional.coefficients().iter().map(|&x| c * x).collect()
            }
            Kernel::RightShift => {
                let mut out = vec![0.0; n];
                for j in 0..n - 1 {
                    out[j] = phi.coefficient(j + 1) * w[j + 1] / w[j];
                }
                out
            }
            Kernel::Diagonal(m) => m
                .iter()
                .zip(phi.coefficients())
                .map(|(a, c)| a * c)
                .collect(),
            Kernel::Transport { sigma, gains } => (0..n)
                .map(|j| phi.coefficient(sigma[j]) * gains[j] * w[sigma[j]] / w[j])
                .collect(),
            Kernel::Sum(terms) => {
                let mut out = vec![0.0; n];
                for t in terms {
                    let a = t.adjoint_apply(phi)?;
                    for (o, c) in out.iter_mut().zip(a.coefficients()) {
                        *o += c;
                    }
                }
                out
            }
            Kernel::Compose(factors) => {
                let mut cur = phi.clone();
                for t in factors.iter() {
                    cur = t.adjoint_apply(&cur)?;
                }
                return Ok(cur);
            }
        };
        Functional::new(Arc::clone(&self.space), coeffs)
    }

    /// Per-column total mass functional including the escape account:
    /// `(T' 1)_j + escape_j / w_j`. Equals the constant 1 exactly for a
    /// Markov operator (before truncation loss).
    pub fn column_mass(&self) -> Result<Functional> {
        let one = Functional::norm_functional(Arc::clone(&self.space));
        let adj = self.adjoint_apply(&one)?;
        let esc = self.accumulated_escape();
        let coeffs: Vec<f64> = adj
            .coefficients()
            .iter()
            .zip(&esc)
            .zip(self.space.weights())
            .map(|((c, e), w)| c + e / w)
            .collect();
        Functional::new(Arc::clone(&self.space), coeffs)
    }

    /// Effective escape per unit coordinate, folding in children (a unit in
    /// coordinate j can leak through an inner factor of a composition).
    fn accumulated_escape(&self) -> Vec<f64> {
        let n = self.dim();
        let mut total = self.escape.clone();
        match &self.kernel {
            Kernel::Sum(terms) => {
                for t in terms {
                    let e = t.accumulated_escape();
                    for (a, b) in total.iter_mut().zip(e) {
                        *a += b;
                    }
                }
            }
            Kernel::Compose(factors) => {
                // Column j escape of A∘B: B's own leak on e_j plus A's leak on B e_j.
                for j in 0..n {
                    let e_j = LatticeVector::basis(Arc::clone(&self.space), j);
                    let mut cur = e_j;
                    let mut esc = 0.0;
                    for t in factors.iter().rev() {
                        let (v, e) = t.apply_tracked(&cur).expect("children share the space");
                        esc += e;
                        cur = v;
                    }
                    total[j] += esc;
                }
            }
            _ => {}
        }
        total
    }

    /// `true` iff the space is in AL mode, the kernel is structurally
    /// nonnegative, and every column mass (including escape) equals 1 within
    /// `tol` in the sup norm: `T' 1 = 1`.
    pub fn is_markov(&self, tol: f64) -> bool {
        if !self.space.is_al() || self.positivity_exempt {
            return false;
        }
        let mass = match self.column_mass() {
            Ok(m) => m,
            Err(_) => return false,
        };
        mass.coefficients().iter().all(|&c| (c - 1.0).abs() <= tol)
    }

    /// Structural column pattern as bitsets (one per column).
    fn column_pattern(&self) -> Vec<BitSet> {
        let n = self.dim();
        match &self.kernel {
            Kernel::Dense(m) => (0..n)
                .map(|j| {
                    let mut b = BitSet::new(n);
                    for i in 0..n {
                        if m[(i, j)] != 0.0 {
                            b.set(i);
                        }
                    }
                    b
                })
                .collect(),
            Kernel::Sparse(triplets) => {
                let mut cols = vec![BitSet::new(n); n];
                for &(i, j, v) in triplets {
                    if v != 0.0 {
                        cols[j].set(i);
                    }
                }
                cols
            }
            Kernel::RankOne { functional, vector } => {
                let mut rows = BitSet::new(n);
                for (i, &x) in vector.entries().iter().enumerate() {
                    if x != 0.0 {
                        rows.set(i);
                    }
                }
                (0..n)
                    .map(|j| {
                        if functional.coefficient(j) != 0.0 {
                            rows.clone()
                        } else {
                            BitSet::new(n)
                        }
                    })
                    .collect()
            }
            Kernel::RightShift => (0..n)
                .map(|j| {
                    let mut b = BitSet::new(n);
                    if j + 1 < n {
                        b.set(j + 1);
                    }
                    b
                })
                .collect(),
            Kernel::Diagonal(m) => (0..n)
                .map(|j| {
                    let mut b = BitSet::new(n);
                    if m[j] != 0.0 {
                        b.set(j);
                    }
                    b
                })
                .collect(),
            Kernel::Transport { sigma, gains } => (0..n)
                .map(|j| {
                    let mut b = BitSet::new(n);
                    if gains[j] != 0.0 {
                        b.set(sigma[j]);
                    }
                    b
                })
                .collect(),
            Kernel::Sum(terms) => {
                let mut cols = vec![BitSet::new(n); n];
                for t in terms {
                    for (acc, c) in cols.iter_mut().zip(t.column_pattern()) {
                        acc.union_with(&c);
                    }
                }
                cols
            }
            Kernel::Compose(factors) => {
                let mut cols: Vec<BitSet> = (0..n)
                    .map(|j| {
                        let mut b = BitSet::new(n);
                        b.set(j);
                        b
                    })
                    .collect();
                for t in factors.iter().rev() {
                    let t_cols = t.column_pattern();
                    cols = cols
                        .iter()
                        .map(|col| {
                            let mut b = BitSet::new(n);
                            col.for_each(|j| b.union_with(&t_cols[j]));
                            b
                        })
                        .collect();
                }
                cols
            }
        }
    }

    /// `true` iff every row has at most one structural nonzero; then
    /// `|T f| = T |f|` identically (T is a lattice homomorphism). Exact for
    /// the atomic spaces in scope.
    pub fn is_lattice_homomorphism(&self) -> bool {
        let n = self.dim();
        let mut row_counts = vec![0usize; n];
        for col in self.column_pattern() {
            col.for_each(|i| row_counts[i] += 1);
        }
        row_counts.iter().all(|&c| c <= 1)
    }

    /// `true` iff every column has at most one structural nonzero; then the
    /// adjoint is a lattice homomorphism (the transport / Frobenius-Perron
    /// pattern).
    pub fn adjoint_is_lattice_homomorphism(&self) -> bool {
        self.column_pattern().iter().all(|c| c.count() <= 1)
    }

    /// Exact weighted l1 -> l1 operator norm of the (truncated) kernel:
    /// `max_j ||T e_j||_1 / ||e_j||_1`.
    pub fn weighted_operator_norm(&self) -> Result<f64> {
        let n = self.dim();
        let mut norm: f64 = 0.0;
        for j in 0..n {
            let col = self.apply(&LatticeVector::basis(Arc::clone(&self.space), j))?;
            norm = norm.max(col.al_norm() / self.space.weight(j));
        }
        Ok(norm)
    }

    pub fn to_dense(&self) -> Result<DenseMatrix> {
        self.to_dense_with_cap(DENSE_CAP)
    }

    /// Materializes the kernel column by column. `cap` guards against
    /// accidental quadratic blow-ups; pass a larger value to override.
    pub fn to_dense_with_cap(&self, cap: usize) -> Result<DenseMatrix> {
        let n = self.dim();
        if n > cap {
            return Err(LabError::MaterializationCap { dim: n, cap });
        }
        let mut m = DenseMatrix::zeros(n);
        for j in 0..n {
            let col = self.apply(&LatticeVector::basis(Arc::clone(&self.space), j))?;
            m.set_column(j, col.entries());
        }
        Ok(m)
    }

    /// Builds a witness for the interval-preservation identity
    /// `T [f, g] = [T f, T g]`: given `f <= g` and `T f <= y <= T g`,
    /// returns `x` with `f <= x <= g` and `T x = y` (within 1e-12 per
    /// coordinate, relative). Requires the adjoint to be a lattice
    /// homomorphism, i.e. at most one structural nonzero per column; the
    /// required mass per output index is then distributed greedily over the
    /// preimage group.
    pub fn interval_preservation_witness(
        &self,
        f: &LatticeVector,
        g: &LatticeVector,
        y: &LatticeVector,
    ) -> Result<LatticeVector> {
        if !self.adjoint_is_lattice_homomorphism() {
            return Err(LabError::StructuralGate(
                "interval preservation needs at most one structural nonzero per column".into(),
            ));
        }
        self.space.check_same(f.space())?;
        self.space.check_same(g.space())?;
        self.space.check_same(y.space())?;
        if !f.le(g) {
            return Err(LabError::InfeasibleTarget("f <= g fails".into()));
        }
        let n = self.dim();
        // Column data: each column j hits one row with one gain.
        let pattern = self.column_pattern();
        let mut column_row = vec![None::<usize>; n];
        let mut column_gain = vec![0.0; n];
        for j in 0..n {
            if let Some(i) = pattern[j].first() {
                let col = self.apply(&LatticeVector::basis(Arc::clone(&self.space), j))?;
                column_row[j] = Some(i);
                column_gain[j] = col.get(i);
            }
        }
        let t_f = self.apply(f)?;
        let t_g = self.apply(g)?;
        let scale = 1.0 + y.entries().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-12 * scale;
        for i in 0..n {
            if y.get(i) < t_f.get(i) - tol || y.get(i) > t_g.get(i) + tol {
                return Err(LabError::InfeasibleTarget(format!(
                    "y[{i}] = {} outside [Tf, Tg] = [{}, {}]",
                    y.get(i),
                    t_f.get(i),
                    t_g.get(i)
                )));
            }
        }

        let mut x = f.entries().to_vec();
        let mut remaining: Vec<f64> = (0..n).map(|i| y.get(i) - t_f.get(i)).collect();
        for j in 0..n {
            let (Some(i), a) = (column_row[j], column_gain[j]) else {
                continue;
            };
            if a <= 0.0 || remaining[i] <= 0.0 {
                continue;
            }
            let room = g.get(j) - f.get(j);
            let delta = (remaining[i] / a).min(room);
            x[j] += delta;
            remaining[i] -= a * delta;
        }
        if remaining.iter().any(|&r| r.abs() > tol) {
            return Err(LabError::InfeasibleTarget(
                "could not distribute the required mass within [f, g]".into(),
            ));
        }
        LatticeVector::new(Arc::clone(&self.space), x)
    }
}

/// Minimal fixed-size bitset for structural patterns.
#[derive(Debug, Clone)]
struct BitSet {
    blocks: Vec<u64>,
}

impl BitSet {
    fn new(bits: usize) -> Self {
        Self {
            blocks: vec![0; bits.div_ceil(64)],
        }
    }

    #[inline]
    fn set(&mut self, i: usize) {
        self.blocks[i / 64] |= 1 << (i % 64);
    }

    fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a |= b;
        }
    }

    fn count(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    fn first(&self) -> Option<usize> {
        for (k, &b) in self.blocks.iter().enumerate() {
            if b != 0 {
                return Some(k * 64 + b.trailing_zeros() as usize);
            }
        }
        None
    }

    fn for_each(&self, mut f: impl FnMut(usize)) {
        for (k, &block) in self.blocks.iter().enumerate() {
            let mut b = block;
            while b != 0 {
                let i = b.trailing_zeros() as usize;
                f(k * 64 + i);
                b &= b - 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_vec(entries: &[f64]) -> LatticeVector {
        LatticeVector::new(WeightedSpace::unit(entries.len()), entries.to_vec()).unwrap()
    }

    #[test]
    fn rank_one_applies_by_pairing() {
        let space = WeightedSpace::unit(3);
        let phi = Functional::new(space.clone(), vec![1.0, 2.0, 0.0]).unwrap();
        let f = LatticeVector::new(space.clone(), vec![0.0, 0.0, 1.0]).unwrap();
        let t = PositiveOperator::rank_one(phi, f).unwrap();
        let g = unit_vec(&[3.0, 1.0, 5.0]);
        let out = t.apply(&g).unwrap();
        assert_eq!(out.entries(), &[0.0, 0.0, 5.0]);
    }

    #[test]
    fn right_shift_escapes_last_coordinate() {
        let space = WeightedSpace::unit(3);
        let s = PositiveOperator::right_shift(space);
        let (out, escaped) = s.apply_tracked(&unit_vec(&[1.0, 2.0, 4.0])).unwrap();
        assert_eq!(out.entries(), &[0.0, 1.0, 2.0]);
        assert_eq!(escaped, 4.0);
    }

    #[test]
    fn identity_norm_is_one_and_markov() {
        let space = WeightedSpace::new(vec![1.0, 3.0, 0.25], 1.0).unwrap();
        let id = PositiveOperator::identity(space);
        assert_eq!(id.weighted_operator_norm().unwrap(), 1.0);
        assert!(id.is_markov(0.0));
    }

    #[test]
    fn half_diagonal_is_not_markov() {
        let space = WeightedSpace::unit(2);
        let t = PositiveOperator::diagonal(space, vec![0.5, 0.5]).unwrap();
        assert!(!t.is_markov(1e-12));
    }

    #[test]
    fn transport_adjoint_is_composition() {
        let space = WeightedSpace::unit(4);
        let sigma = vec![1, 2, 0, 0];
        let t = PositiveOperator::transport(space.clone(), sigma.clone(), vec![1.0; 4]).unwrap();
        assert!(t.adjoint_is_lattice_homomorphism());
        let g = Functional::new(space, vec![5.0, 7.0, 11.0, 13.0]).unwrap();
        let back = t.adjoint_apply(&g).unwrap();
        let expected: Vec<f64> = sigma.iter().map(|&j| g.coefficient(j)).collect();
        assert_eq!(back.coefficients(), expected.as_slice());
    }

    #[test]
    fn permutation_is_lattice_homomorphism_both_ways() {
        let space = WeightedSpace::unit(3);
        let t = PositiveOperator::transport(space, vec![1, 2, 0], vec![1.0; 3]).unwrap();
        assert!(t.is_lattice_homomorphism());
        assert!(t.adjoint_is_lattice_homomorphism());
    }

    #[test]
    fn structural_checks_ignore_stored_zeros() {
        let space = WeightedSpace::unit(2);
        // Dense [[1, 0], [0, 1]] with explicit zeros is still a lattice homomorphism.
        let m = DenseMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let t = PositiveOperator::dense(space, m).unwrap();
        assert!(t.is_lattice_homomorphism());
        assert!(t.adjoint_is_lattice_homomorphism());
    }

    #[test]
    fn compose_pattern_is_product_pattern() {
        let space = WeightedSpace::unit(3);
        let shift = PositiveOperator::right_shift(space.clone());
        let diag = PositiveOperator::diagonal(space, vec![1.0, 0.0, 2.0]).unwrap();
        let c = PositiveOperator::compose(vec![shift, diag]).unwrap();
        // Column 0 -> row 1, column 1 -> nothing (killed by the diagonal zero),
        // column 2 -> leaks out.
        assert!(c.is_lattice_homomorphism());
        assert!(c.adjoint_is_lattice_homomorphism());
        let out = c.apply(&unit_vec(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(out.entries(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn witness_returns_endpoints_at_zero_slack() {
        let space = WeightedSpace::unit(4);
        let t =
            PositiveOperator::transport(space.clone(), vec![0, 0, 1, 1], vec![1.0, 2.0, 1.0, 0.5])
                .unwrap();
        let f = LatticeVector::new(space.clone(), vec![0.1, 0.2, 0.0, 1.0]).unwrap();
        let g = LatticeVector::new(space.clone(), vec![0.5, 1.2, 3.0, 1.0]).unwrap();
        let x = t
            .interval_preservation_witness(&f, &g, &t.apply(&f).unwrap())
            .unwrap();
        assert!(x.max_abs_diff(&f) < 1e-12);
        let x = t
            .interval_preservation_witness(&f, &g, &t.apply(&g).unwrap())
            .unwrap();
        assert!(t.apply(&x).unwrap().max_abs_diff(&t.apply(&g).unwrap()) < 1e-12);
    }

    #[test]
    fn witness_rejects_infeasible_target() {
        let space = WeightedSpace::unit(2);
        let t = PositiveOperator::transport(space.clone(), vec![0, 0], vec![1.0, 1.0]).unwrap();
        let f = LatticeVector::zeros(space.clone());
        let g = LatticeVector::ones(space.clone());
        let y = LatticeVector::new(space, vec![5.0, 0.0]).unwrap();
        assert!(matches!(
            t.interval_preservation_witness(&f, &g, &y),
            Err(LabError::InfeasibleTarget(_))
        ));
    }

    #[test]
    fn rejects_negative_entries() {
        let space = WeightedSpace::unit(2);
        let m = DenseMatrix::from_rows(vec![vec![1.0, -0.1], vec![0.0, 1.0]]);
        assert!(PositiveOperator::dense(space.clone(), m).is_err());
        assert!(PositiveOperator::sparse(space.clone(), vec![(0, 0, -1.0)]).is_err());
        assert!(PositiveOperator::diagonal(space, vec![1.0, -1.0]).is_err());
    }
}
