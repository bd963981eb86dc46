//! Error type shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the engine.
///
/// Input validation is strict: dimension mismatches, out-of-range
/// parameters and enumeration budget violations are rejected eagerly with
/// the offending value in the message, never silently clamped.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Shapes of two objects that must agree do not.
    #[error("dimension mismatch for {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A scalar parameter lies outside its admissible range.
    #[error("{0}")]
    InvalidParameter(String),

    /// A norm evaluator was asked to run on a space it does not support.
    #[error("unsupported method: {0}")]
    UnsupportedMethod(String),

    /// An exact enumeration would exceed the hard budget.
    #[error("enumeration budget exceeded: {context} needs 2^{bits} leaves (budget 2^{budget})")]
    BudgetExceeded {
        context: &'static str,
        bits: u32,
        budget: u32,
    },

    /// Config file or flag parsing failed.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed binary path-bundle data.
    #[error("bundle format error: {0}")]
    BundleFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
