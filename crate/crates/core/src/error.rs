use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature needs {needed} nodes but the budget is {budget}")]
    QuadratureBudget { needed: usize, budget: usize },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("integral diverges for d={d}, q={q}")]
    Divergent { d: u32, q: u32 },

    #[error("graph is not series-parallel reducible ({remaining} nodes left)")]
    NotSeriesParallel { remaining: usize },

    #[error("pairing budget exceeded: total degree {total} > {budget}")]
    PairingBudget { total: u32, budget: u32 },

    #[error("covariance factorization failed after jitter {jitter:e}")]
    Factorization { jitter: f64 },

    #[error("grid does not resolve degree {ell}: {reason}")]
    GridMismatch { ell: u32, reason: String },

    #[error("chaos truncation not certified: {0}")]
    TruncationNotCertified(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
