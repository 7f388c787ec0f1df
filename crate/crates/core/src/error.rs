use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid limit {0}: must be at least 1")]
    InvalidLimit(u64),

    #[error("{value} is outside the sieve range [1, {limit}]")]
    OutOfRange { value: u64, limit: u64 },

    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),

    #[error("arithmetic overflow while computing {0}")]
    Overflow(&'static str),

    #[error("grid size {grid} too small: need more than {required}")]
    GridTooSmall { grid: usize, required: usize },

    #[error("budget exceeded: {what} needs {needed}, cap is {cap}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    #[error("product is not a perfect square (residual squarefree kernel {kernel})")]
    NotSquare { kernel: String },

    #[error("row and column products differ")]
    UnequalProducts,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("config error in field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
