use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid base {0}: bases must be integers >= 2")]
    InvalidBase(u32),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty set: the admissible language is empty after pruning")]
    EmptySet,
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
    #[error("depth too large: {what} would produce {count} items (cap {cap})")]
    DepthTooLarge { what: String, count: u128, cap: u128 },
    #[error("split required: interval [{lo}, {hi}] straddles a map breakpoint")]
    SplitRequired { lo: f64, hi: f64 },
    #[error("system is not transitive: ergodicity of the Markov measure is not guaranteed")]
    NotTransitive,
    #[error("undersampled: {samples} samples for {bins} bins (need at least {bins})")]
    Undersampled { samples: usize, bins: usize },
    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NonConvergence { iterations: usize, estimate: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
