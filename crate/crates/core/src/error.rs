use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid cost weights: {0}")]
    InvalidWeights(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("invalid solver settings: {0}")]
    InvalidSolverSettings(&'static str),
    #[error("estimator has not recorded any step yet")]
    NoSamples,
    #[error("confidence set does not intersect the parameter box")]
    EmptyConfidenceIntersection,
    #[error("no candidate in the search region has a finite optimal cost")]
    NoFeasibleCandidate,
    #[error("true system is not stabilizable over the channel")]
    NotStabilizable,
    #[error("margin of stability must be positive")]
    NonPositiveMargin,
}
