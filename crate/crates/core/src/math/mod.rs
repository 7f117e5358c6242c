//! Deterministic numerical primitives shared by every other module.

mod linalg;
mod logistic;
mod normal;
mod rng;

pub use linalg::{cholesky_solve, ols_fit, LinearFit, Matrix};
pub(crate) use linalg::dot;
pub use logistic::{expit, logistic_fit, logistic_fit_with, LogisticFit, LogisticOptions};
pub use normal::{normal_cdf, normal_quantile};
pub use rng::{derive_seed, Rng};
