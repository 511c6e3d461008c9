use thiserror::Error;

/// Errors produced by the learners, mechanisms and certificates.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    /// A restriction set with no points.
    #[error("restriction set is empty")]
    EmptyRestriction,

    /// An exponential mechanism was asked to select from nothing.
    #[error("hypothesis set is empty")]
    EmptyClass,

    /// An exhaustive computation exceeds its enumeration guard.
    #[error("{what}: size {size} exceeds limit {limit}{}", hint.as_deref().map(|h| format!(" ({h})")).unwrap_or_default())]
    TooLarge {
        what: &'static str,
        size: u128,
        limit: u128,
        hint: Option<String>,
    },

    /// Point weights that do not form a probability distribution.
    #[error("weights do not form a distribution: {0}")]
    BadDistribution(String),

    /// Not enough examples for the requested partitioning.
    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    /// A point index outside `0..domain_size`.
    #[error("point {point} is outside a domain of size {domain_size}")]
    PointOutOfDomain { point: usize, domain_size: usize },

    /// Parameter outside its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn too_large(what: &'static str, size: u128, limit: u128) -> Self {
        Error::TooLarge {
            what,
            size,
            limit,
            hint: None,
        }
    }
}
