//! Crate-wide error type.

use thiserror::Error;

/// One problem found while parsing a config or model file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseIssue {
    /// 1-based line number the issue was found on.
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ParseIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("not Hermitian: max |A - A\u{2020}| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("trace {trace:.17} is not 1 within tolerance")]
    TraceNotOne { trace: f64 },

    #[error("eigenvalue {eigenvalue:.3e} below the positivity floor")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("not idempotent: max |P\u{b2} - P| = {deviation:.3e}")]
    NotIdempotent { deviation: f64 },

    #[error("projector trace {trace:.12} does not match rank {rank}")]
    RankTraceMismatch { trace: f64, rank: usize },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("vectors are linearly dependent (residual norm {residual:.3e})")]
    RankDeficient { residual: f64 },

    #[error("time step must be positive, got {0}")]
    NonPositiveDelta(f64),

    #[error("time must be finite, got {0}")]
    NonFiniteTime(f64),

    #[error("imaginary residue {0:.3e} exceeds tolerance; input is numerically corrupt")]
    ImaginaryResidue(f64),

    #[error("formula rate {0:.6e} is not positive: sequence reported as non-decaying")]
    NonDecaying(f64),

    #[error("linear system is ill-conditioned (estimate {0:.3e})")]
    IllConditioned(f64),

    #[error("channel {0:?} has no continuum levels")]
    EmptyChannel(String),

    #[error("invalid channel partition: {0}")]
    InvalidPartition(String),

    #[error("fit did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("input rejected with {} issue(s):\n{}", .0.len(), format_issues(.0))]
    Parse(Vec<ParseIssue>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn format_issues(issues: &[ParseIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    /// Process exit status class for the CLI. Documented in `--help`.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::InvalidInput(_) => 2,
            Error::Io(_) => 4,
            Error::NoConvergence(_) => 5,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
