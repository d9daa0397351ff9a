use thiserror::Error;

/// Errors reported by the analysis routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cone has no admissible region: {0}")]
    NotAdmissible(String),
    #[error("over-determined boundary data: {0}")]
    OverDetermined(String),
    #[error("quadrature failed on [{lo:e}, {hi:e}] with error estimate {error:e}")]
    Quadrature { lo: f64, hi: f64, error: f64 },
    #[error("integration failed at t = {t:e}: {reason}")]
    Integration { t: f64, reason: String },
    #[error("perturbation too large: eps = {eps:e}, threshold = {threshold:e}")]
    PerturbationTooLarge { eps: f64, threshold: f64 },
    #[error("fixed-point iteration diverged after {iterations} iterations (factor {factor:.3})")]
    Divergence { iterations: usize, factor: f64 },
    #[error("green's function changes sign at r = {r:e}")]
    SignChange { r: f64 },
    #[error("too few dyadic windows: {found} < {needed}")]
    InsufficientWindows { found: usize, needed: usize },
    #[error("divergent integral: exponent {exponent} is not admissible for sigma = {sigma}")]
    Divergent { exponent: f64, sigma: f64 },
    #[error("zero function has no asymptotic rate")]
    ZeroFunction,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("no certificate: {0}")]
    NoCertificate(String),
}

impl ConeError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, ConeError>;
