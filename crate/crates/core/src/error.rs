use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid privacy budget: epsilon={epsilon}, delta={delta}")]
    InvalidBudget { epsilon: f64, delta: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The estimator is undefined on the supplied dataset.
    #[error("adapter failure: {0}")]
    AdapterFailure(String),

    /// An adapter broke its contract (undefined estimate on the release path,
    /// negative or non-finite sub-distance, non-finite estimate).
    #[error("adapter contract violation: {0}")]
    ContractViolation(String),

    #[error("release probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("class {0} has no records")]
    EmptyClass(usize),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NonSymmetric(f64),

    #[error("Gram matrix is singular (smallest eigenvalue {0:e})")]
    SingularGram(f64),

    #[error("kernel degree at the query point is zero")]
    ZeroDegree,

    #[error("linear system ill-conditioned (residual {0:e})")]
    IllConditioned(f64),

    #[error("{0}")]
    OutOfRange(String),

    #[error("oracle input too large: n*p = {0} exceeds 500")]
    TooLarge(usize),

    #[error("configuration error: {0}")]
    Config(String),
}
