//! IPW and AIPW estimators for trial data (known assignment probability) and
//! observational data (fitted logistic propensity).

use super::weighting::{combine, guard_probabilities, WeightedTerms};
use super::{Dataset, EstimateSummary, EstimatorOptions, RctDesign, Source};
use crate::error::{Error, Result};
use crate::math::{logistic_fit, ols_fit, LinearFit, LogisticFit};

pub(crate) fn require_source(data: &Dataset, source: Source) -> Result<()> {
    if data.source() != source {
        return Err(Error::domain(format!(
            "estimator expects {source:?} data, got {:?}",
            data.source()
        )));
    }
    Ok(())
}

pub(crate) fn require_both_arms(data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::domain("empty dataset"));
    }
    let treated = data.n_treated();
    if treated == 0 {
        return Err(Error::DegenerateArm("treated arm (A = 1) has no rows".into()));
    }
    if treated == data.len() {
        return Err(Error::DegenerateArm("control arm (A = 0) has no rows".into()));
    }
    Ok(())
}

/// Linear outcome models `μ₀`, `μ₁` (with intercept), one per arm.
#[derive(Debug, Clone)]
pub struct OutcomeModels {
    pub control: LinearFit,
    pub treated: LinearFit,
}

impl OutcomeModels {
    pub fn fit(data: &Dataset) -> Result<Self> {
        let design = data.covariates().with_intercept();
        let fit_arm = |arm: u8, name: &str| -> Result<LinearFit> {
            let idx = data.arm_indices(arm);
            if idx.len() < design.ncols() {
                return Err(Error::DegenerateArm(format!(
                    "{name} arm has {} rows, outcome model needs at least {}",
                    idx.len(),
                    design.ncols()
                )));
            }
            let y: Vec<f64> = idx.iter().map(|&i| data.outcome()[i]).collect();
            ols_fit(&design.select_rows(&idx), &y)
        };
        Ok(Self {
            control: fit_arm(0, "control")?,
            treated: fit_arm(1, "treated")?,
        })
    }

    /// `(μ₀(xᵢ), μ₁(xᵢ))` on every row of `data`.
    pub fn predict(&self, data: &Dataset) -> (Vec<f64>, Vec<f64>) {
        let design = data.covariates().with_intercept();
        (self.control.predict(&design), self.treated.predict(&design))
    }
}

/// Logistic propensity `π_o(x; η̂)` with intercept, fit on all rows.
pub fn fit_propensity(data: &Dataset) -> Result<LogisticFit> {
    let labels: Vec<f64> = data.treatment().iter().map(|&a| f64::from(a)).collect();
    logistic_fit(&data.covariates().with_intercept(), &labels)
}

fn ipw_terms(data: &Dataset, probs: &[f64], weights: Option<&[f64]>) -> WeightedTerms {
    let n = data.len();
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let a = data.treatment();
    WeightedTerms {
        treated: (0..n).map(|i| f64::from(a[i]) * w(i) / probs[i]).collect(),
        control: (0..n).map(|i| f64::from(1 - a[i]) * w(i) / (1.0 - probs[i])).collect(),
        residual: data.outcome().to_vec(),
        augmentation: Vec::new(),
    }
}

pub(crate) fn aipw_terms(
    data: &Dataset,
    probs: &[f64],
    models: &OutcomeModels,
    weights: Option<&[f64]>,
    in_sample_augmentation: bool,
) -> WeightedTerms {
    let (mu0, mu1) = models.predict(data);
    let mut terms = ipw_terms(data, probs, weights);
    for (i, r) in terms.residual.iter_mut().enumerate() {
        *r -= if data.treatment()[i] == 1 { mu1[i] } else { mu0[i] };
    }
    if in_sample_augmentation {
        terms.augmentation = mu1.iter().zip(&mu0).map(|(a, b)| a - b).collect();
    }
    terms
}

fn label(base: &str, opts: &EstimatorOptions) -> String {
    if opts.stabilized {
        // rct_ipw -> rct_sipw
        match base.split_once('_') {
            Some((src, kind)) => format!("{src}_s{kind}"),
            None => format!("s{base}"),
        }
    } else {
        base.to_string()
    }
}

fn rct_probs(data: &Dataset, design: &RctDesign) -> Result<Vec<f64>> {
    require_source(data, Source::Rct)?;
    require_both_arms(data)?;
    design.validate(data.len())?;
    Ok(design.probabilities(data.len()))
}

fn obs_probs(data: &Dataset, opts: &EstimatorOptions) -> Result<Vec<f64>> {
    require_source(data, Source::Obs)?;
    require_both_arms(data)?;
    let fit = fit_propensity(data)?;
    let mut probs = fit.predict(&data.covariates().with_intercept());
    guard_probabilities(&mut probs, opts.weight_floor, opts.stabilized)?;
    Ok(probs)
}

fn finish(terms: &WeightedTerms, opts: &EstimatorOptions, base: &str) -> Result<EstimateSummary> {
    let (est, infl) = combine(terms, opts.stabilized)?;
    Ok(EstimateSummary::from_influence(est, &infl, label(base, opts)))
}

/// Horvitz–Thompson contrast with the known assignment probability.
pub fn rct_ipw(data: &Dataset, design: &RctDesign) -> Result<EstimateSummary> {
    rct_ipw_with(data, design, &EstimatorOptions::default())
}

pub fn rct_ipw_with(
    data: &Dataset,
    design: &RctDesign,
    opts: &EstimatorOptions,
) -> Result<EstimateSummary> {
    let probs = rct_probs(data, design)?;
    finish(&ipw_terms(data, &probs, None), opts, "rct_ipw")
}

/// Augmented IPW with per-arm linear outcome models fit on the trial.
pub fn rct_aipw(data: &Dataset, design: &RctDesign) -> Result<EstimateSummary> {
    rct_aipw_with(data, design, &EstimatorOptions::default())
}

pub fn rct_aipw_with(
    data: &Dataset,
    design: &RctDesign,
    opts: &EstimatorOptions,
) -> Result<EstimateSummary> {
    let probs = rct_probs(data, design)?;
    let models = OutcomeModels::fit(data)?;
    finish(&aipw_terms(data, &probs, &models, None, true), opts, "rct_aipw")
}

/// IPW with a logistic propensity fit on the same observational rows.
pub fn obs_ipw(data: &Dataset) -> Result<EstimateSummary> {
    obs_ipw_with(data, &EstimatorOptions::default())
}

pub fn obs_ipw_with(data: &Dataset, opts: &EstimatorOptions) -> Result<EstimateSummary> {
    let probs = obs_probs(data, opts)?;
    finish(&ipw_terms(data, &probs, None), opts, "obs_ipw")
}

/// Doubly robust AIPW on observational rows.
pub fn obs_aipw(data: &Dataset) -> Result<EstimateSummary> {
    obs_aipw_with(data, &EstimatorOptions::default())
}

pub fn obs_aipw_with(data: &Dataset, opts: &EstimatorOptions) -> Result<EstimateSummary> {
    let probs = obs_probs(data, opts)?;
    let models = OutcomeModels::fit(data)?;
    finish(&aipw_terms(data, &probs, &models, None, true), opts, "obs_aipw")
}
