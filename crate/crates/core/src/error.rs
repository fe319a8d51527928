use thiserror::Error;

/// Error classes raised by the library.
///
/// Each variant maps to one diagnostic class of the command-line tool, so the
/// variants stay coarse: the message carries the detail.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("no bound state at coupling {coupling} (below the critical coupling)")]
    NoBoundState { coupling: f64 },

    #[error("state n={n}, l={l} is not bound at coupling {coupling}")]
    StateNotBound { n: usize, l: usize, coupling: f64 },

    #[error("eigensolver did not converge: {0}")]
    NonConvergence(String),

    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("abscissae must be strictly increasing")]
    NonMonotoneAbscissae,

    #[error("empty domain: {0}")]
    EmptyDomain(String),

    #[error("data are not concave: no admissible Coulomb weight")]
    NotConcave,

    #[error("no real critical coupling: {0}")]
    NoRoot(String),

    #[error("Hulthen bound-state condition violated: v*alpha = {lhs} < beta^2 (n+1)^2 = {rhs}")]
    HulthenNotBound { lhs: f64, rhs: f64 },

    #[error("unknown dataset label '{0}'")]
    UnknownDataset(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("inversion failed: {0}")]
    Inversion(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn to_f64<T: num_traits::ToPrimitive>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
