//! Average treatment effect estimation that fuses a randomized trial with an
//! observational study.
//!
//! The crate is organized bottom-up:
//!
//! - [`math`]: seeded random streams, normal distribution functions, least
//!   squares and logistic regression.
//! - [`estimators`]: row-level IPW/AIPW estimators for trial and
//!   observational data, participation-weighted trial estimators, stabilized
//!   variants, sandwich and bootstrap variance.
//! - [`fusion`]: naive pooling, anchored thresholding, the oracle estimator
//!   and confidence intervals, operating on [`EstimateSummary`] values.
//! - [`simulation`]: the Monte Carlo harness (population DGP, factor grid,
//!   MSE-ratio tables) and the Gaussian verification model.
//! - [`io`]: summary and micro-data CSV formats and report writers.

pub mod error;
pub mod estimators;
pub mod fusion;
pub mod io;
pub mod math;
pub mod simulation;

pub use error::{Error, Result};
pub use estimators::{Dataset, EstimateSummary, RctDesign, Source};
pub use fusion::{FusionConfig, FusionResult, IntervalResult};
pub use math::{Matrix, Rng};
