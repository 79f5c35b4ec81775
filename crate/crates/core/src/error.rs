use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// A mathematical precondition of the problem does not hold (N > 2s,
    /// positivity, nonresonance, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("mass matrix is ill-conditioned (condition number {condition:.3e})")]
    Conditioning { condition: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("subspace split at m = {m} falls inside the degenerate cluster {cluster:?}")]
    SplitAmbiguous { m: usize, cluster: Vec<usize> },

    #[error("beta_inf = {beta_inf} is resonant with eigenvalue beta_{index} = {eigenvalue}")]
    Resonant {
        beta_inf: f64,
        index: usize,
        eigenvalue: f64,
    },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best: Box<crate::nonlinear::CriticalPoint>,
    },

    #[error("nonlinearity validation failed: {}", .0.failures.join("; "))]
    ValidationFailed(Box<crate::nonlinear::NonlinearityReport>),

    #[error("oracle inconclusive: {0}")]
    OracleInconclusive(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
