use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("distributions are defined over different token sets ({left} vs {right} tokens)")]
    SupportMismatch { left: usize, right: usize },

    #[error("frequency {frequency} exceeds the table range {max_frequency}; rebuild the table with max frequency >= {frequency}")]
    FrequencyOutOfRange { frequency: u64, max_frequency: u64 },

    #[error("key `{key}` has frequency {frequency} whose inclusion probability is 0, so it cannot be in a sample")]
    ZeroInclusion { key: String, frequency: u64 },

    #[error("g({frequency}) > 0 but the inclusion probability is 0; the statistic is inestimable")]
    Inestimable { frequency: u64 },

    #[error("triangular system has a zero diagonal entry at frequency {0}")]
    ZeroDiagonal(u64),

    #[error("token {0} is never emitted by any row of the table")]
    UnknownToken(usize),

    #[error("row {row}: no breakpoint solves the {what} equation in (0, {upper}] (target {target:e}, attainable range [{low:e}, {high:e}])")]
    NoBreakpoint {
        row: usize,
        what: &'static str,
        upper: f64,
        target: f64,
        low: f64,
        high: f64,
    },

    #[error("operation requires threshold ppswor sampling with identity weights")]
    NotPpsworIdentity,

    #[error("non-integrable configuration: {0}")]
    NonIntegrable(String),

    #[error("unsupported table: {0}")]
    UnsupportedTable(String),

    #[error("table violates ({epsilon}, {delta})-DP between rows {from} and {to}: divergence {divergence:e}")]
    DpViolation {
        from: usize,
        to: usize,
        divergence: f64,
        epsilon: f64,
        delta: f64,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable tag used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::SupportMismatch { .. } => "support-mismatch",
            Error::FrequencyOutOfRange { .. } => "frequency-out-of-range",
            Error::ZeroInclusion { .. } => "zero-inclusion",
            Error::Inestimable { .. } => "inestimable",
            Error::ZeroDiagonal(_) => "zero-diagonal",
            Error::UnknownToken(_) => "unknown-token",
            Error::NoBreakpoint { .. } => "no-breakpoint",
            Error::NotPpsworIdentity => "not-ppswor-identity",
            Error::NonIntegrable(_) => "non-integrable",
            Error::UnsupportedTable(_) => "unsupported-table",
            Error::DpViolation { .. } => "dp-violation",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
