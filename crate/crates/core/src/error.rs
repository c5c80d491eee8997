use thiserror::Error;

use crate::metric::MetricPoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state-space mismatch: {0} vs {1}")]
    SpaceMismatch(String, String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("non-finite coordinate in real vector")]
    NonFinite,

    #[error("empty point set")]
    EmptyPointSet,

    #[error("empty measure")]
    EmptyMeasure,

    #[error("empty test-function dictionary")]
    EmptyDictionary,

    #[error("all sample pairs are degenerate (zero distance)")]
    DegeneratePairs,

    #[error("selection probabilities at {at} sum to {sum}, not 1")]
    ProbabilityVector { at: MetricPoint, sum: f64 },

    #[error("no Lipschitz propagation constant exists: gamma*(1-r) = {lhs} <= kappa = {kappa}")]
    NoLipschitzConstant { lhs: f64, kappa: f64 },

    #[error("literal parameters invalid at ({i},{k}): branch mass {mass} > 1")]
    InvalidCell { i: u64, k: u64, mass: f64 },

    #[error("state {0} cannot be simulated (k = inf is a limit point)")]
    InfiniteLevel(String),

    #[error("horizon {requested} exceeds trajectory length {available}")]
    HorizonExceeded { requested: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
