use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user input: bad dimensions, out-of-range parameters, scale guards.
    #[error("configuration error: {0}")]
    Config(String),

    /// A policy violates row-stochasticity or a structural predicate.
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    /// Every model was eliminated. Theory forbids this with high probability,
    /// so it usually points at a tolerance problem.
    #[error("all models eliminated: {0}")]
    AllEliminated(String),

    /// The elimination driver ran out of rounds.
    #[error("round limit of {limit} exceeded with {remaining} models left")]
    RoundLimit { limit: usize, remaining: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad input rather than a failed run.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidPolicy(_) | Error::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
