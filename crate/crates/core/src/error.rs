use thiserror::Error;

/// Errors raised by value-of-information computations.
///
/// Variants are grouped into three classes (see [`Error::class`]) which the
/// command-line front end maps onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("no conjugate update for {prior} prior with {likelihood} data")]
    NoConjugateUpdate { prior: String, likelihood: String },

    #[error("no direct effective-sample-size formula for {prior} prior with {likelihood} data")]
    NoDirectEss { prior: String, likelihood: String },

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("importance weights degenerate at N = {n}: every likelihood underflowed")]
    Degenerate { n: u64 },

    #[error("metamodel diagnostics failed: {0}")]
    Diagnostics(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input data, config or arguments.
    Data,
    /// Numerical or method failure on valid input.
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Format(_)
            | Error::Parse { .. }
            | Error::Schema(_)
            | Error::Argument(_)
            | Error::Domain(_)
            | Error::Config { .. }
            | Error::Io(_) => ErrorClass::Data,
            Error::Numeric(_)
            | Error::Model(_)
            | Error::Dimension(_)
            | Error::NoConjugateUpdate { .. }
            | Error::NoDirectEss { .. }
            | Error::Estimation(_)
            | Error::Degenerate { .. }
            | Error::Diagnostics(_) => ErrorClass::Numeric,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Format(_) => "format",
            Error::Parse { .. } => "parse",
            Error::Schema(_) => "schema",
            Error::Argument(_) => "argument",
            Error::Domain(_) => "domain",
            Error::Config { .. } => "config",
            Error::Numeric(_) => "numeric",
            Error::Model(_) => "model",
            Error::Dimension(_) => "dimension",
            Error::NoConjugateUpdate { .. } => "no_conjugate_update",
            Error::NoDirectEss { .. } => "no_direct_ess",
            Error::Estimation(_) => "estimation",
            Error::Degenerate { .. } => "degenerate",
            Error::Diagnostics(_) => "diagnostics",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
