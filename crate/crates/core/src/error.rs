use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph is disconnected ({0})")]
    Disconnected(String),

    #[error("matrix is not symmetric (asymmetry {asym:.3e} exceeds {tol:.3e})")]
    NotSymmetric { asym: f64, tol: f64 },

    #[error("eigendecomposition did not converge")]
    EigenNonConvergence,

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("inexactness certificate failed: r = {r:.3e} >= 1")]
    CertificateFailure { r: f64 },

    #[error("descent property violated at outer iteration {iteration}: f_next - f_prev = {excess:.3e} above the allowed decrease")]
    DescentViolated { iteration: usize, excess: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
