use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
///
/// Every variant maps onto one of the CLI exit codes via [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("axis sets overlap on axis {0}")]
    AxisOverlap(usize),

    #[error("alphabet mismatch: expected size {expected}, found {found}")]
    AlphabetMismatch { expected: usize, found: usize },

    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("infeasible: {reason}")]
    Infeasible {
        reason: String,
        /// Best known estimate of the maximal equivocation at the requested
        /// distortion, when the failure is an equivocation target above it.
        gamma_estimate: Option<f64>,
    },

    #[error(
        "no convergence after {iterations} iterations (residual {residual:e}, last rate {rate}, last distortion {distortion})"
    )]
    NotConverged {
        iterations: usize,
        residual: f64,
        rate: f64,
        distortion: f64,
    },

    #[error("enumeration of {count} channels exceeds budget {budget}")]
    BudgetExceeded { count: u128, budget: u64 },

    #[error("row {row}, column {column:?}: {message}")]
    Csv {
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    CsvParse(#[from] csv::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 validation, 2 infeasibility, 3 non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible { .. } => 2,
            Error::NotConverged { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
