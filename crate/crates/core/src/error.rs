use thiserror::Error;

/// Errors raised by the numerical engines and the continuous-variable layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("ground state did not converge after {iterations} iterations (last |dE| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("non-finite wavefunction at step {step}")]
    NonFinite { step: usize },

    #[error("momentum grid too coarse: dv = {dv:e} but phase gradient requires dv <= {max_dv:e}")]
    CoarseMomentumGrid { dv: f64, max_dv: f64 },

    #[error("time samples are not on a uniform grid")]
    NonUniformGrid,

    #[error("correlation tables do not match: {0}")]
    TableMismatch(String),

    #[error("bilinear form is indefinite: eigenvalue {0:e}")]
    IndefiniteForm(f64),

    #[error("unphysical covariance: smallest symplectic eigenvalue {0} < 1/2")]
    Unphysical(f64),

    #[error("covariance matrix is singular")]
    SingularCovariance,

    #[error("cache integrity: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
