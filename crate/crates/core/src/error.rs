use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time {time} lies outside the interval [{start}, {end}]")]
    OutOfDomain { time: f64, start: f64, end: f64 },

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid uniformization policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid observations: {0}")]
    InvalidObservations(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// No state sequence is compatible with the likelihood terms up to `step`.
    #[error("inconsistent evidence at step {step}")]
    InconsistentEvidence { step: usize },

    /// Same as [`Error::InconsistentEvidence`] but raised while resampling one
    /// CTBN node.
    #[error("inconsistent evidence for node {node} at slot {slot}")]
    InconsistentNodeEvidence { node: usize, slot: usize },

    #[error("two auxiliary grid times coincide at t = {0}")]
    TimeCollision(f64),

    #[error("gave up after {attempts} attempts: {what}")]
    AttemptsExhausted { attempts: usize, what: String },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
