use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the conversion toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("{0}")]
    Domain(String),

    /// A wavelength or temperature lies outside the declared validity range of a model.
    #[error("{quantity} = {value} outside valid range [{min}, {max}]")]
    Range {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// The requested feature is not offered by the chosen provider or model.
    #[error("{0}")]
    Capability(String),

    /// A device cannot be designed for the requested process.
    #[error("{0}")]
    Design(String),

    /// A bracketing search found no sign change.
    #[error("no solution in window [{lo}, {hi}] nm")]
    NoSolution { lo: f64, hi: f64 },

    /// An iterative solver failed to converge or produced non-finite values.
    #[error("{0}")]
    Numeric(String),

    /// The least-squares normal matrix is singular.
    #[error("rank-deficient normal matrix: {0}")]
    RankDeficient(String),

    #[error("{context}: {message}")]
    Parse { context: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable identifier, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Range { .. } => "range",
            Error::Capability(_) => "capability",
            Error::Design(_) => "design",
            Error::NoSolution { .. } => "no_solution",
            Error::Numeric(_) => "numeric",
            Error::RankDeficient(_) => "rank_deficient",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
