use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("integrand returned NaN at x = {abscissa:e}")]
    IntegrandNan { abscissa: f64 },

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (value {value:e}, error estimate {error_estimate:e}){context}"
    )]
    QuadratureNonConvergence {
        value: f64,
        error_estimate: f64,
        subdivisions: usize,
        context: String,
    },

    #[error("state is not normalizable: {0}")]
    NonNormalizable(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("phase mismatch: {0}")]
    PhaseMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Attach a short context string to a quadrature failure.
    pub fn with_context(self, ctx: &str) -> Self {
        match self {
            Error::QuadratureNonConvergence {
                value,
                error_estimate,
                subdivisions,
                context,
            } => Error::QuadratureNonConvergence {
                value,
                error_estimate,
                subdivisions,
                context: format!("{context}; {ctx}"),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
