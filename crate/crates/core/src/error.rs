use thiserror::Error;

/// Errors raised while building schedules, operators and certificates, or
/// while running an iteration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KmError {
    /// Integer arithmetic inside a rate function left the `u128` range.
    #[error("integer overflow while evaluating {context}")]
    Overflow { context: String },

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A real-valued quantity that must be finite was NaN or infinite.
    #[error("non-finite value at iteration {index}: {what}")]
    NonFinite { index: usize, what: String },

    /// The caller-side preconditions of a check are not met.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Malformed or inconsistent run configuration.
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl KmError {
    pub fn overflow(context: impl Into<String>) -> Self {
        KmError::Overflow {
            context: context.into(),
        }
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        KmError::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, KmError>;
