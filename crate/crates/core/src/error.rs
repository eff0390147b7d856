use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EdmError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("mean {m} outside the mean domain: {constraint}")]
    Domain { m: f64, constraint: String },

    #[error("LMS parameters too close to the p = b singularity: |p-b|/max(p,b) = {gap:e} < {threshold:e}")]
    SingularParams { gap: f64, threshold: f64 },

    #[error("kernel index {n} exceeds the partition-sum oracle cap {cap}")]
    OracleCapExceeded { n: usize, cap: usize },

    #[error("precision loss at kernel index {n}: {detail} (retry with extended precision)")]
    Precision { n: usize, detail: String },

    #[error("tail mass {tail:e} still above eps {eps:e} after {cap} terms")]
    CapReached { cap: usize, tail: f64, eps: f64 },

    #[error("tail too heavy for moments: remaining mass {tail:e}")]
    HeavyTail { tail: f64 },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("only {cells} cells remain after pooling; at least {needed} required")]
    InsufficientCells { cells: usize, needed: usize },

    #[error("optimizer did not converge for {model}; best log-likelihood {best_loglik}")]
    NonConvergence { model: String, best_loglik: f64 },
}

pub type Result<T, E = EdmError> = std::result::Result<T, E>;
