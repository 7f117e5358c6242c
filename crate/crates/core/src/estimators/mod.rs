//! Row-level average treatment effect estimators with influence-function
//! standard errors.

mod ate;
mod bootstrap;
mod dataset;
mod participation;
mod sandwich;
mod summary;
mod weighting;


pub use ate::{
    fit_propensity, obs_aipw, obs_aipw_with, obs_ipw, obs_ipw_with, rct_aipw, rct_aipw_with,
    rct_ipw, rct_ipw_with, OutcomeModels,
};
pub use bootstrap::bootstrap_se;
pub use dataset::{split_obs, Dataset, RctDesign, Source, SplitObsData};
pub use participation::{
    fit_participation, rct_aippw, rct_aippw_with, rct_ippw, rct_ippw_with,
};
pub use sandwich::{obs_aipw_sandwich, sandwich_variance_obs_aipw};
pub use summary::EstimateSummary;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::LogisticFit;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    /// Normalize weights within each arm by their empirical mean.
    pub stabilized: bool,
    /// Fitted probabilities outside `[floor, 1 - floor]` raise an error, or
    /// are clamped when `stabilized`.
    pub weight_floor: f64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            stabilized: false,
            weight_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    RctIpw,
    RctAipw,
    ObsIpw,
    ObsAipw,
    RctIppw,
    RctAippw,
}

/// Everything an estimator might need; unused fields may be `None`.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorInputs<'a> {
    pub data: &'a Dataset,
    pub design: Option<&'a RctDesign>,
    pub participation: Option<&'a LogisticFit>,
    pub o1: Option<&'a Dataset>,
}

impl<'a> EstimatorInputs<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        Self {
            data,
            design: None,
            participation: None,
            o1: None,
        }
    }
}

fn needed<T>(value: Option<T>, what: &str, kind: EstimatorKind) -> Result<T> {
    value.ok_or_else(|| Error::domain(format!("{kind:?} needs {what}")))
}

pub fn estimate(
    kind: EstimatorKind,
    inputs: EstimatorInputs<'_>,
    opts: &EstimatorOptions,
) -> Result<EstimateSummary> {
    let data = inputs.data;
    match kind {
        EstimatorKind::RctIpw => {
            rct_ipw_with(data, needed(inputs.design, "a design", kind)?, opts)
        }
        EstimatorKind::RctAipw => {
            rct_aipw_with(data, needed(inputs.design, "a design", kind)?, opts)
        }
        EstimatorKind::ObsIpw => obs_ipw_with(data, opts),
        EstimatorKind::ObsAipw => obs_aipw_with(data, opts),
        EstimatorKind::RctIppw => rct_ippw_with(
            data,
            needed(inputs.design, "a design", kind)?,
            needed(inputs.participation, "a participation model", kind)?,
            opts,
        ),
        EstimatorKind::RctAippw => rct_aippw_with(
            data,
            needed(inputs.design, "a design", kind)?,
            needed(inputs.participation, "a participation model", kind)?,
            needed(inputs.o1, "the O1 sample", kind)?,
            opts,
        ),
    }
}

/// The stabilized (mean-normalized weight) form of `kind`.
pub fn stabilize(kind: EstimatorKind, inputs: EstimatorInputs<'_>) -> Result<EstimateSummary> {
    let opts = EstimatorOptions {
        stabilized: true,
        ..EstimatorOptions::default()
    };
    estimate(kind, inputs, &opts)
}
