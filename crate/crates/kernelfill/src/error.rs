use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// Inversion refused because the eigenvalue ratio min/max fell below the
    /// positive-definiteness threshold.
    #[error("matrix is numerically singular (eigenvalue ratio {ratio:.3e})")]
    SingularMatrix { ratio: f64 },

    /// The hidden-block S_hh of a partitioned inverse could not be inverted.
    #[error("singular projection block: {0}")]
    SingularProjection(String),

    #[error("optimization failed after {iterations} iterations: {message}")]
    OptimizationFailed { iterations: usize, message: String },

    /// A model direction is numerically orthogonal to the target matrix.
    #[error("degenerate direction {index}: quadratic form {value:.3e}")]
    DegenerateDirection { index: usize, value: f64 },

    /// A sample has zero self-similarity and cannot be normalized.
    #[error("degenerate sample {0}: zero self-kernel")]
    DegenerateSample(String),

    #[error("numerical divergence: {0}")]
    DivergedNumerically(String),
}

pub type Result<T> = std::result::Result<T, Error>;
