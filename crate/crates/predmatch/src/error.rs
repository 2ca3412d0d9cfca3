//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("unknown prior `{0}` for family `{1}`")]
    UnknownPrior(String, String),

    #[error("parameter {theta:?} outside the admissible domain: {reason}")]
    DomainViolation { theta: Vec<f64>, reason: String },

    #[error("root not bracketed on [{lo}, {hi}]: f(lo)={flo:.6e}, f(hi)={fhi:.6e}")]
    NoBracket {
        lo: f64,
        hi: f64,
        flo: f64,
        fhi: f64,
    },

    #[error("root finder did not converge within {0} iterations")]
    RootIterations(usize),

    #[error("non-finite integrand value at x = {0}")]
    NonFiniteIntegrand(f64),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("information matrix at {theta:?} is numerically singular or indefinite (min eigenvalue {min_eig:.3e})")]
    NonRegularModel { theta: Vec<f64>, min_eig: f64 },

    #[error("matrix is numerically singular (condition estimate {0:.3e})")]
    SingularMatrix(f64),

    #[error("region-sensitivity profiles are linearly dependent at {theta:?} (independence ratio {ratio:.3e}): no unique uniformly matching prior")]
    LinearlyDependentXi { theta: Vec<f64>, ratio: f64 },

    #[error("vector field is not a gradient field (path mismatch {0:.3e})")]
    NotAGradientField(f64),

    #[error("posterior grid misplaced: {0}")]
    GridMisplaced(String),

    #[error("too many posterior-grid retries: {retries} of {replicates} replicates")]
    TooManyGridRetries { retries: usize, replicates: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
