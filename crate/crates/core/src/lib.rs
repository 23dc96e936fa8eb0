//! Order-restricted trend tests for one-way layouts.
//!
//! The crate approximates Bartholomew's E̅²ₖ test by a maximum contrast test
//! against the grand mean in which the group means are replaced by their
//! pool-adjacent-violators (isotonic) estimates. Alongside it live the usual
//! competitors (ANOVA F, unrestricted grand-mean contrasts, Williams-type
//! contrasts, a permutation E̅²ₖ) and a Monte Carlo harness for empirical size
//! and power studies.
//!
//! Module map:
//!
//! - [`isotonic`]: weighted PAVA.
//! - [`contrasts`]: grand-mean and Williams contrast matrices, their correlation.
//! - [`dist`]: t and F distribution functions, multivariate-t rectangle
//!   probabilities and equicoordinate quantiles.
//! - [`estimators`]: group summaries, pooled and sandwich covariance, studentized
//!   contrasts.
//! - [`procedures`]: the hypothesis tests and their reports.
//! - [`sim`]: scenarios, simulation runs, span calibration and table rendering.

pub mod contrasts;
pub mod dist;
pub mod error;
pub mod estimators;
pub mod isotonic;
pub mod procedures;
pub mod sim;

pub use error::{Error, ErrorClass, Result};

/// Order of the alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
pub enum Direction {
    #[default]
    Increasing,
    Decreasing,
}

impl Direction {
    /// `+1.0` for increasing, `-1.0` for decreasing.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        }
    }
}
