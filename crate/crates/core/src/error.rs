use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("integrator step collapsed to {step:.3e} at |zeta| = {at:.6}")]
    Stiffness { step: f64, at: f64 },

    #[error("extrapolated residue did not stabilise (spread {spread:.3e})")]
    FitFailure { spread: f64 },

    #[error("Gram matrix is numerically singular (pivot ratio {condition:.3e})")]
    SingularGram { condition: f64 },

    #[error("not in Case I: sqrt(p) expression is {0:.6e} < 0")]
    Case(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

impl Error {
    /// True for errors caused by invalid input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Case(_))
    }
}
