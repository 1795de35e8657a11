use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("invalid time {0}: must be positive (and integral in discrete mode)")]
    InvalidTime(f64),

    #[error("infeasible target: {0}")]
    InfeasibleTarget(String),

    #[error("hypothesis not certified: {0}")]
    HypothesisNotCertified(String),

    #[error("structural gate failed: {0}")]
    StructuralGate(String),

    #[error("power iteration did not converge within {max_iter} iterations (residual {residual:.3e})")]
    NonConvergence { max_iter: usize, residual: f64 },

    #[error("unsupported branch: {0}")]
    UnsupportedBranch(String),

    #[error("dense materialization of dimension {dim} exceeds cap {cap} (pass an explicit override)")]
    MaterializationCap { dim: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
