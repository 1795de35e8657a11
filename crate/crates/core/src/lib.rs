//! Numerical laboratory for lower-bound convergence criteria of positive
//! operator semigroups on weighted sequence spaces.
//!
//! The crate provides, bottom up:
//!
//! * [`space`] / [`vector`] / [`functional`] — weighted index spaces with
//!   lattice operations, the AL / lp / psi norms, and the deficiency
//!   `||(f - h)^-||` that lower bounds are phrased in;
//! * [`operator`] — structured positive operators (dense, sparse, rank-one,
//!   shift, diagonal, transport, sums and compositions) with adjoints,
//!   exact weighted operator norms, structural Markov and
//!   lattice-homomorphism checks, and escaped-mass accounting for truncated
//!   infinite-dimensional kernels;
//! * [`semigroup`] — discrete powers and uniformized continuous-time
//!   evaluation, with incremental orbits;
//! * [`convergence`] — strong and operator-norm convergence diagnostics and
//!   the embedded-discrete consistency checks;
//! * [`bounds`] — lower-bound estimators and the theorem-level certifiers
//!   (uniform, individual, maximal, Ding-style, rigidity, psi-weighted);
//! * [`fp`] — Frobenius-Perron operators of finite maps and Ulam
//!   discretizations of piecewise-affine interval maps;
//! * [`gallery`] — self-validating constructors for the named instances the
//!   test suites run on;
//! * [`exact`] — exact rational arithmetic backing the gallery's closed-form
//!   identities;
//! * [`io`] — JSON instance descriptions, report envelopes and CSV traces.

pub mod bounds;
pub mod convergence;
pub mod error;
pub mod exact;
pub mod fp;
pub mod functional;
pub mod gallery;
pub mod io;
pub mod numeric;
pub mod operator;
pub mod semigroup;
pub mod space;
pub mod vector;

pub use error::{LabError, Result};
pub use functional::Functional;
pub use numeric::DenseMatrix;
pub use operator::{Kernel, PositiveOperator};
pub use semigroup::{Orbit, Semigroup, SemigroupKind};
pub use space::WeightedSpace;
pub use vector::{LatticeVector, NormKind};
