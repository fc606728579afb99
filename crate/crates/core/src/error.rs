use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    /// A numeric input outside the function's domain (NaN, infinity, negative variance).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A configuration value violating a type invariant. `field` is the dotted path.
    #[error("invalid configuration: `{field}` {reason}")]
    InvalidConfig { field: String, reason: String },

    /// The decision direction vanished; the boundary is decided by the count ratio alone.
    #[error(
        "degenerate decision boundary: count-ratio-only accuracy is ({fallback_pos}, {fallback_neg})"
    )]
    DegenerateBoundary { fallback_pos: f64, fallback_neg: f64 },

    #[error("degenerate fraction prior: {0}")]
    DegeneratePrior(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        LabError::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
