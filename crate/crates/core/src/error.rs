use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown camera id {0}")]
    UnknownCamera(u32),

    #[error("invalid rig: {0}")]
    InvalidRig(String),

    #[error("need at least 2 affine correspondences, got {0}")]
    TooFewCorrespondences(usize),

    #[error("need at least 6 constraint rows, got {0}")]
    TooFewRows(usize),

    #[error("translation direction undefined for zero-norm vector")]
    ZeroNorm,

    /// The constant coefficient matrix of the pencil cannot be inverted
    /// reliably.
    #[error("pencil constant term is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),

    #[error("deflated companion matrix is {got}x{got}, expected {expected}x{expected}")]
    Structural { expected: usize, got: usize },

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("scene generation failed: no visible point after {0} attempts")]
    FrustumExhausted(usize),

    #[error("invalid value for {field}: {message}")]
    Format { field: String, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            message: message.into(),
        }
    }
}
