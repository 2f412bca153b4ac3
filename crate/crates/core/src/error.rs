use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no tick strictly before grid start t0={t0}")]
    NoPriorTick { t0: i64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("event at t={time} lies beyond the walk horizon {horizon}")]
    EventBeyondHorizon { time: f64, horizon: u64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("window of {dt} s does not fit a series spanning {span} s")]
    WindowTooLarge { dt: u64, span: u64 },

    #[error("only {overlap} overlapping points at lag {lag}, need at least 2")]
    InsufficientOverlap { lag: i64, overlap: usize },

    #[error("return series has zero variance")]
    ZeroVariance,

    #[error("lag-zero cross moment is zero; decay function undefined")]
    ZeroDenominator,

    #[error("autocorrelation kernel sum {sum} is not positive at dt={dt} s")]
    NonPositiveKernel { dt: u64, sum: f64 },

    #[error("argument must be non-negative, got {0}")]
    NegativeArgument(f64),

    #[error("{path}: line {line}: {reason}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("{path}: line {line}: timestamp goes backwards")]
    NonMonotoneTimestamps { path: PathBuf, line: u64 },

    #[error("{0}: no ticks left after session filtering")]
    EmptyAfterFiltering(PathBuf),

    #[error("no day had usable data for both instruments")]
    NoUsableDays,

    #[error("empty input")]
    EmptyInput,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
