use thiserror::Error;

/// Errors shared across the estimation pipeline.
#[derive(Error, Debug)]
pub enum Error {
    #[error("parameter infeasible for model {model}: row {row} violates the feasibility domain")]
    InfeasibleParameter { model: &'static str, row: usize },

    #[error("penalty argument must be nonnegative, got {0}")]
    NegativeArgument(f64),

    #[error("penalty derivative argument must be positive, got {0}")]
    NonpositiveArgument(f64),

    #[error("threshold curvature must be positive, got {0}")]
    NonpositiveCurvature(f64),

    #[error("dataset is on the {found:?} scale but the {method} objective requires {required:?}")]
    ScaleMismatch {
        method: &'static str,
        found: crate::model::Scale,
        required: crate::model::Scale,
    },

    #[error("no feasible starting point: zero initialization is infeasible and no point was provided")]
    NoFeasibleStart,

    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("degenerate residual variance ({0:.3e}); BIC undefined")]
    DegenerateVariance(f64),

    #[error("covariance matrix not positive definite after maximum jitter {max_jitter:.1e}")]
    CovarianceNotPd { max_jitter: f64 },

    #[error("surface curve changes sign on the grid (first crossing near y = {y:.4})")]
    SignChange { y: f64 },

    #[error("dimension mismatch: {context} expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
