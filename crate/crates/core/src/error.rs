use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("modulus must be at least 2, got {0}")]
    ModulusTooSmall(u64),

    #[error("modulus {0} exceeds the supported desk-scale limit of {1}")]
    ModulusTooLarge(u64, u64),

    #[error("requires q ≡ 3 mod 4, got q = {0}")]
    RequiresThreeModFour(u64),

    #[error("{what}: size {size} exceeds the guard of {limit}; {advice}")]
    SizeGuard {
        what: &'static str,
        size: u128,
        limit: u128,
        advice: &'static str,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty point set")]
    EmptySet,

    #[error("convolution rounding residue {residue:.3e} at index {index} exceeds 1e-3")]
    PrecisionBreach { index: usize, residue: f64 },

    #[error("point-set file, line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
