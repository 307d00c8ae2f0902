use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),

    #[error("{n} is not a sum of {d} squares")]
    NoRepresentation { n: u64, d: usize },

    #[error("grid spacing {spacing} exceeds the resolution limit {limit}")]
    GridTooCoarse { spacing: f64, limit: f64 },

    #[error("incompatible periodicity: {0}")]
    IncompatiblePeriodicity(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("topology inconsistency: {0}")]
    TopologyInconsistency(String),

    #[error("no interior domains in any replicate")]
    NoInteriorDomains,

    #[error("insufficient tail: {0}")]
    InsufficientTail(String),

    #[error("invalid set pair: {0}")]
    InvalidPair(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("replicate {replicate} at R = {radius} (seed {seed:#018x}) failed: {source}")]
    Replicate {
        radius: f64,
        replicate: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
