use thiserror::Error;

/// Which matrix failed a positive-definiteness (Cholesky) test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    /// The analyzed (sample or population) covariance.
    Sample,
    /// The model-implied covariance.
    Implied,
    /// A Hessian block or other derived matrix.
    Hessian,
}

impl std::fmt::Display for Which {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Which::Sample => "analyzed covariance",
            Which::Implied => "model-implied covariance",
            Which::Hessian => "focal Hessian block",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("(I - A) is numerically singular at the given parameter vector")]
    SingularStructure,

    #[error("{0} is not positive definite")]
    NotPositiveDefinite(Which),

    #[error("misfit target epsilon = {epsilon} unreachable within the perturbation bracket")]
    TargetUnreachable { epsilon: f64 },

    #[error("no convergence after {iterations} iterations (gradient max-norm {grad_norm:e})")]
    NoConvergence { iterations: usize, grad_norm: f64 },

    #[error("contour leaves the admissible region before reaching the target level")]
    ContourEscapesDomain,

    #[error("sampled covariance is degenerate")]
    DegenerateSample,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
