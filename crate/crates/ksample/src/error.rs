//! Error type shared by every module in the crate.

/// Errors raised by statistics, encodings, and generators.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Malformed or inconsistent input (shape mismatches, invalid arguments).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The statistic needs more samples than were provided.
    #[error("sample size too small: need at least {needed}, got {got}")]
    SampleSize { needed: usize, got: usize },

    /// Median bandwidth heuristic found no strictly positive pairwise distance.
    #[error("degenerate bandwidth: all pairwise distances are zero")]
    DegenerateBandwidth,

    /// A self-covariance term is zero, so the normalized statistic is undefined.
    #[error("degenerate variance: statistic undefined for a constant sample")]
    DegenerateVariance,

    /// A matrix required to be invertible is singular or numerically rank-deficient.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// Simulation parameters describe an impossible geometry.
    #[error("invalid geometry: {0}")]
    Geometry(String),

    /// Simulation id not present in the registry.
    #[error("unknown simulation `{0}`")]
    UnknownSimulation(String),

    /// Test name not recognized by the runner.
    #[error("unknown test `{0}`")]
    UnknownTest(String),
}

pub type Result<T> = std::result::Result<T, Error>;
