use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Incompatible matrix/vector dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A Hermitian factorization hit a non-positive pivot.
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    /// Scene geometry violates an invariant.
    #[error("invalid scene: {0}")]
    InvalidScene(String),

    /// The primary field is identically zero, so the reduction metric is undefined.
    #[error("regional power reduction undefined: primary field is zero")]
    ZeroPrimaryField,

    /// The control filter left the finite range during adaptation.
    #[error("control filter became non-finite at iteration {iteration}")]
    NonFiniteFilter { iteration: usize },

    /// No grid value of the penalty weight reaches the radiation budget.
    #[error("no lambda on the grid brings converged radiation near the budget (best {best:.3e} W vs budget {budget:.3e} W)")]
    NoFeasibleLambda { best: f64, budget: f64 },

    /// Configuration parse or validation failure.
    #[error("config error: {0}")]
    Config(String),

    /// I/O failure, with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the CLI: 1 config/validation, 2 numerical, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidScene(_) => 1,
            Error::Io { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
