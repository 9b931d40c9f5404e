use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A market or policy parameter violates its invariant. The message names
    /// the parameter and the constraint it must satisfy.
    #[error("{name} must {constraint}")]
    InvalidParameter { name: String, constraint: String },

    #[error("quality {0} lies outside [0,1]")]
    Domain(f64),

    #[error("uniform draw {0} lies outside (0,1)")]
    UniformDomain(f64),

    #[error("signal model evaluation failed: {0}")]
    Model(String),

    #[error("quantile bisection did not converge after {0} iterations")]
    Bisection(usize),

    #[error("adaptive quadrature did not reach tolerance {0:e}")]
    Quadrature(f64),

    #[error(
        "best-response iteration did not converge after {iterations} iterations \
         (residual {residual:e}, last iterate x_A={x_a}, x_B={x_b})"
    )]
    EquilibriumNotFound {
        iterations: usize,
        residual: f64,
        x_a: f64,
        x_b: f64,
    },

    #[error("invalid model config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            constraint: constraint.into(),
        }
    }
}
