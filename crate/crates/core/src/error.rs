use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Covariance factorization failed even at the largest jitter.
    /// `points` is the closest pair of training inputs.
    #[error("covariance factorization failed (jitter {jitter:e}); closest training points are #{} and #{}", points.0, points.1)]
    Factorization { jitter: f64, points: (usize, usize) },

    #[error("no feasible incumbent: the objective model or best feasible value is absent")]
    NoFeasibleIncumbent,

    #[error("optimizer failure: {0}")]
    Optimizer(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("trajectory format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
