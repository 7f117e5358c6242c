//! Participation-weighted trial estimators that transport the trial effect
//! to the observational (target) population.

use super::ate::{aipw_terms, require_both_arms, require_source, OutcomeModels};
use super::weighting::{combine, guard_probabilities, WeightedTerms};
use super::{Dataset, EstimateSummary, EstimatorOptions, RctDesign, Source};
use crate::error::{Error, Result};
use crate::math::{logistic_fit, LogisticFit};

/// Logistic regression of trial membership on covariates over `C ∪ O₁`,
/// giving `e_c(x; ξ̂)`.
pub fn fit_participation(rct: &Dataset, o1: &Dataset) -> Result<LogisticFit> {
    require_source(rct, Source::Rct)?;
    if rct.n_covariates() != o1.n_covariates() {
        return Err(Error::domain(format!(
            "trial has {} covariates, O1 has {}",
            rct.n_covariates(),
            o1.n_covariates()
        )));
    }
    let design = rct
        .covariates()
        .vstack(o1.covariates())?
        .with_intercept();
    let labels: Vec<f64> = std::iter::repeat_n(1.0, rct.len())
        .chain(std::iter::repeat_n(0.0, o1.len()))
        .collect();
    logistic_fit(&design, &labels)
}

/// Odds weights `(1 - e)/e` on the trial rows, after the probability guard.
fn odds_weights(
    rct: &Dataset,
    participation: &LogisticFit,
    opts: &EstimatorOptions,
) -> Result<Vec<f64>> {
    let design = rct.covariates().with_intercept();
    if design.ncols() != participation.coefficients.len() {
        return Err(Error::domain(format!(
            "participation model has {} coefficients, trial design has {} columns",
            participation.coefficients.len(),
            design.ncols()
        )));
    }
    let mut e = participation.predict(&design);
    guard_probabilities(&mut e, opts.weight_floor, opts.stabilized)?;
    Ok(e.iter().map(|e| (1.0 - e) / e).collect())
}

fn rct_setup(rct: &Dataset, design: &RctDesign) -> Result<Vec<f64>> {
    require_source(rct, Source::Rct)?;
    require_both_arms(rct)?;
    design.validate(rct.len())?;
    Ok(design.probabilities(rct.len()))
}

fn label(base: &str, opts: &EstimatorOptions) -> String {
    if opts.stabilized {
        format!("rct_s{base}")
    } else {
        format!("rct_{base}")
    }
}

pub fn rct_ippw(
    rct: &Dataset,
    design: &RctDesign,
    participation: &LogisticFit,
) -> Result<EstimateSummary> {
    rct_ippw_with(rct, design, participation, &EstimatorOptions::default())
}

/// Trial IPW contrast reweighted by the participation odds `(1 - e_c)/e_c`.
pub fn rct_ippw_with(
    rct: &Dataset,
    design: &RctDesign,
    participation: &LogisticFit,
    opts: &EstimatorOptions,
) -> Result<EstimateSummary> {
    let probs = rct_setup(rct, design)?;
    let w = odds_weights(rct, participation, opts)?;
    let a = rct.treatment();
    let terms = WeightedTerms {
        treated: (0..rct.len()).map(|i| f64::from(a[i]) * w[i] / probs[i]).collect(),
        control: (0..rct.len())
            .map(|i| f64::from(1 - a[i]) * w[i] / (1.0 - probs[i]))
            .collect(),
        residual: rct.outcome().to_vec(),
        augmentation: Vec::new(),
    };
    let (est, infl) = combine(&terms, opts.stabilized)?;
    Ok(EstimateSummary::from_influence(est, &infl, label("ippw", opts)))
}

pub fn rct_aippw(
    rct: &Dataset,
    design: &RctDesign,
    participation: &LogisticFit,
    o1: &Dataset,
) -> Result<EstimateSummary> {
    rct_aippw_with(rct, design, participation, o1, &EstimatorOptions::default())
}

/// Participation-weighted residual term over the trial plus the outcome
/// model contrast `μ₁ - μ₀` averaged over `O₁`.
///
/// The `O₁` average divides by `|O₁|`; with the default split `|O₁| = n_c`.
/// The variance adds the two independent pieces:
/// `se² = Var_C(ψ)/n_c + Var_{O₁}(μ₁ - μ₀)/|O₁|`.
pub fn rct_aippw_with(
    rct: &Dataset,
    design: &RctDesign,
    participation: &LogisticFit,
    o1: &Dataset,
    opts: &EstimatorOptions,
) -> Result<EstimateSummary> {
    let probs = rct_setup(rct, design)?;
    if o1.is_empty() {
        return Err(Error::domain("AIPPW needs a nonempty O1 sample"));
    }
    if o1.n_covariates() != rct.n_covariates() {
        return Err(Error::domain("O1 and trial covariate counts differ"));
    }
    let w = odds_weights(rct, participation, opts)?;
    let models = OutcomeModels::fit(rct)?;
    let terms = aipw_terms(rct, &probs, &models, Some(&w), false);
    let (residual_part, infl) = combine(&terms, opts.stabilized)?;

    let (mu0, mu1) = models.predict(o1);
    let contrast: Vec<f64> = mu1.iter().zip(&mu0).map(|(a, b)| a - b).collect();
    let n_o1 = contrast.len() as f64;
    let contrast_mean = contrast.iter().sum::<f64>() / n_o1;
    let contrast_var = contrast
        .iter()
        .map(|d| (d - contrast_mean).powi(2))
        .sum::<f64>()
        / n_o1;

    let n_c = rct.len();
    let var_c = infl.iter().map(|v| v * v).sum::<f64>() / n_c as f64;
    let se = (var_c / n_c as f64 + contrast_var / n_o1).sqrt();
    Ok(EstimateSummary::from_sigma(
        residual_part + contrast_mean,
        se * (n_c as f64).sqrt(),
        n_c,
        label("aippw", opts),
    ))
}
