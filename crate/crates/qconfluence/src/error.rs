use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point (r={modulus:.6e}, arg={argument:.6}) lies outside the declared domain{context}")]
    Domain {
        modulus: f64,
        argument: f64,
        context: String,
    },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("pole proximity at {location}: {detail}")]
    Pole { location: String, detail: String },

    #[error("disk-series evaluation at |z|={modulus:.6e} exceeds {limit:.6e}")]
    DiskRadius { modulus: f64, limit: f64 },

    #[error("{what} did not converge after {terms} terms (tail estimate {tail:.3e})")]
    NonConvergence {
        what: String,
        terms: usize,
        tail: f64,
    },

    #[error("resonance between indices ({j}, {k}): leading-term ratio equals q^{n}")]
    Resonance { j: usize, k: usize, n: i64 },

    #[error("valuation mismatch for entry ({j}, {k}): predicted {predicted}, found {found}")]
    ValuationMismatch {
        j: usize,
        k: usize,
        predicted: String,
        found: String,
    },

    #[error("inversion of a series with zero leading term")]
    ZeroLeadingTerm,

    #[error("direction {direction:.12} hits declared singular direction {singular:.12}")]
    SingularDirection { direction: f64, singular: f64 },

    #[error("divergent component without a Borel image: {0}")]
    MissingBorelImage(String),

    #[error("no admissible direction: {0}")]
    EmptyIntersection(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("at {location}: {source}")]
    At { location: String, source: Box<Error> },
}

impl Error {
    /// Attach the point or task at which the error occurred.
    pub fn at(self, location: impl Into<String>) -> Self {
        Error::At {
            location: location.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
