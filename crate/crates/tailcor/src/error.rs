//! Error type shared by every estimator in the crate.

use thiserror::Error;

/// Anything that can go wrong while estimating.
#[derive(Debug, Error)]
pub enum Error {
    /// A probability level fell outside its admissible range.
    #[error("invalid quantile level {value}: {reason}")]
    InvalidLevel { value: f64, reason: &'static str },

    /// Input data failed a structural requirement.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A series was shorter than the estimator needs.
    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    /// An interquantile range used as a denominator was zero.
    #[error("degenerate scale: {0} has a zero interquantile range")]
    DegenerateScale(String),

    /// Kendall's tau is undefined because a margin is fully tied.
    #[error("degenerate ranks: a margin is fully tied so Kendall's tau is undefined")]
    DegenerateRanks,

    /// A semi-moment was requested on a side with no observations.
    #[error("degenerate side: no observations {0} the center")]
    DegenerateSide(&'static str),

    /// The bounded transform is undefined here: tailcor below 1 while |rho| < 1.
    #[error("pathological region: tailcor {tailcor} is below 1 while |rho| = {rho_abs} < 1")]
    PathologicalRegion { tailcor: f64, rho_abs: f64 },

    /// A dispersion matrix failed its factorization.
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    /// The operation is not defined for the requested model family.
    #[error("unsupported: {0}")]
    Unsupported(&'static str),

    /// Panel columns are misaligned, empty, or labels collide.
    #[error("panel shape error: {0}")]
    PanelShape(String),

    /// A pairwise estimate failed inside a matrix or rolling computation.
    #[error("pair ({row}, {col}) failed: {source}")]
    Pair {
        row: String,
        col: String,
        #[source]
        source: Box<Error>,
    },

    /// Too many bootstrap replicates failed to estimate.
    #[error("unstable bootstrap: {failed} of {total} replicates failed")]
    UnstableBootstrap { failed: usize, total: usize },

    /// A model parameter was out of range.
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
