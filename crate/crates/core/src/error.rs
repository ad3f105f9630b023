use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("correlation matrix is not positive semi-definite (pivot {pivot:e})")]
    NotPositiveSemiDefinite { pivot: f64 },
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("asset loading matrix is singular at t = {t}")]
    SingularSigma { t: f64 },
    #[error("argument outside the domain: {0}")]
    Domain(&'static str),
    #[error("kernel variance is negative ({0:e})")]
    NegativeVariance(f64),
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("root is not bracketed on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
