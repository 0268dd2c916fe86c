use thiserror::Error;

/// Errors produced by the click-bandit library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} must lie in [0, 1], got {value}")]
    Probability { what: &'static str, value: f64 },

    #[error("{what} must be {constraint}, got {value}")]
    Domain {
        what: &'static str,
        constraint: &'static str,
        value: f64,
    },

    #[error("horizon T = {0} is below the minimum of 5")]
    HorizonTooShort(u64),

    #[error("dimension mismatch for {what}: expected {expected}, got {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid ranked list: {0}")]
    InvalidList(String),

    #[error("position {position} is out of range for a list of {len} positions")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("optimal list is not unique: items {0} and {1} tie in attraction")]
    AmbiguousOptimum(usize, usize),

    #[error("protocol violation: {0}")]
    Protocol(&'static str),

    #[error("batch {batch} has not completed stage {stage}")]
    StageIncomplete { batch: usize, stage: u32 },

    #[error("bound is undefined: {0}")]
    BoundUndefined(&'static str),

    #[error("config error at line {line}: {message}")]
    ConfigLine { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_probability(what: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Probability { what, value })
    }
}
