use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("not a permutation of 1..{n}: {reason}")]
    InvalidPermutation { n: usize, reason: String },

    #[error("window exceeds sample: k={k} does not fit in n={n}")]
    WindowExceedsSample { n: usize, k: usize },

    #[error("window length must be at least 2, got k={k}")]
    WindowTooShort { k: usize },

    #[error("target undefined below e^e: n={n} (need n >= 16)")]
    TargetUndefined { n: u64 },

    #[error("probability must lie in (0, 1), got {0}")]
    InvalidProbability(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration cap exceeded: n={n} > cap {cap}")]
    EnumerationCapExceeded { n: usize, cap: usize },

    #[error("zero trials")]
    ZeroTrials,

    #[error("scan invariant violated in trial {trial}: {detail}")]
    InvariantViolation { trial: u64, detail: String },

    #[error("empty grid range: n_min={n_min} > n_max={n_max}")]
    EmptyGrid { n_min: u64, n_max: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
