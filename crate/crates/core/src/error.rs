use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpqmError {
    #[error("invalid truncation dimension {dim} (need at least {min})")]
    InvalidDimension { dim: usize, min: usize },

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("Cartan chart is singular at r = {r:e} (need r > {r_min:e})")]
    SingularChart { r: f64, r_min: f64 },

    #[error("parameter regime violated: {0}")]
    Regime(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("effective sample size collapsed: {ess:.1} of {paths} paths")]
    EssCollapse { ess: f64, paths: usize },

    #[error("truncation error: {0}")]
    Truncation(String),
}

pub type Result<T> = std::result::Result<T, SpqmError>;
