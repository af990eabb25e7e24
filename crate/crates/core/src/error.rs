use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument `{name}` = {value} is outside its domain ({expected})")]
    Domain { name: &'static str, value: f64, expected: &'static str },

    #[error("invalid offspring law: {0}")]
    InvalidLaw(String),

    #[error("{operation} is not available for {variant} laws")]
    Unsupported { operation: &'static str, variant: &'static str },

    #[error("degenerate law: mean is 1")]
    Degenerate,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge: error estimate {achieved:e} exceeds {requested:e}")]
    ToleranceNotMet { achieved: f64, requested: f64 },

    #[error("generation {requested} exceeds the mechanism horizon {horizon}")]
    HorizonExceeded { requested: usize, horizon: usize },

    #[error("root is not bracketed on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    BracketFailure { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("support of size {size} exceeds the enumeration limit {limit}")]
    SupportTooLarge { size: usize, limit: usize },

    #[error("unknown verification suite `{0}`")]
    UnknownSuite(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain { name, value, expected }
    }
}
