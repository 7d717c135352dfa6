use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("operation requires {0}")]
    Unsupported(String),

    #[error("iterative eigensolver did not converge after {iterations} restarts (residuals: {residuals:?})")]
    EigenNonConvergence { iterations: usize, residuals: Vec<f64> },

    #[error("Newton solver did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonNonConvergence { iterations: usize, residual: f64, last_iterate: Vec<f64> },

    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("functional T-Q fit failed: {reason} (residual {residual:e})")]
    TqFit { reason: String, residual: f64 },

    #[error("root at a singular point of {0}")]
    Singularity(String),

    #[error("energy has residual imaginary part {0:e}")]
    ComplexEnergy(f64),

    #[error("eta = {eta} below series guard {eta_min}; use the XXX limit")]
    EtaBelowGuard { eta: f64, eta_min: f64 },

    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
