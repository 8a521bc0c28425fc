use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter {value} lies outside the parameter space {domain}")]
    OutsideDomain { value: f64, domain: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("{outcomes} outcomes exceed the exhaustive-enumeration limit of {limit}")]
    TooManyOutcomes { outcomes: usize, limit: usize },

    #[error("interval width {width} admits no sample size in [{lower}, {upper}] (N_min = {n_min}); start from a shorter interval")]
    Width {
        width: f64,
        lower: f64,
        upper: f64,
        n_min: u64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("rejected input: {0}")]
    Rejected(String),

    #[error("assumption violation: {0}")]
    AssumptionViolation(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
