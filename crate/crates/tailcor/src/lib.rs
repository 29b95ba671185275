//! Tail correlation (TailCoR) estimation for financial return panels.
//!
//! TailCoR measures the dependence between two series in the tails of their
//! joint distribution. The estimator standardizes each margin by its median
//! and interquantile range, projects the standardized pair on a line, and
//! reads dependence off the tail interquantile range of that projection,
//! normalized so that independent Gaussian data score 1. Under ellipticity
//! the measure factors exactly into a linear part, driven by the shape
//! correlation, and a nonlinear part, driven by tail thickness.
//!
//! The crate provides:
//!
//! - quantile primitives and the Gaussian normalization constant ([`quantile`])
//! - Kendall-tau based robust correlation and semi-moments ([`rank`])
//! - the pairwise estimator with decomposition, a bounded alternative
//!   transform, and downside/upside variants ([`pair`])
//! - N-by-N matrices with a pooled nonlinear component ([`matrix`])
//! - moving-block bootstrap standard errors ([`bootstrap`])
//! - elliptical and mean-variance-mixture samplers plus a Monte Carlo
//!   harness ([`simulation`])
//! - rolling-window application over panels ([`rolling`])
//!
//! Everything is deterministic given explicit seeds, and all estimators are
//! pure functions safe to call from multiple threads.

pub mod bootstrap;
pub mod error;
pub mod matrix;
pub mod pair;
pub mod panel;
pub mod quantile;
pub mod rank;
pub mod rolling;
pub mod seeding;
pub mod simulation;

pub use error::{Error, Result};
pub use pair::{AnglePolicy, PairEstimate, TailConfig};
pub use panel::Panel;
pub use quantile::{Level, LevelPair};
