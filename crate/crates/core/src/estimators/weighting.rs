//! Shared arithmetic of the weighting estimators.
//!
//! Every estimator here has the form
//! `mean(aᵢ rᵢ) - mean(bᵢ rᵢ) + mean(dᵢ)` where `aᵢ` is the weight on a
//! treated residual (zero for controls), `bᵢ` the weight on a control
//! residual, `rᵢ` the outcome or outcome-model residual and `dᵢ` the
//! outcome-model contrast. Stabilization replaces each weighted mean by a
//! ratio with the mean weight in the denominator.

use crate::error::{Error, Result};

pub(crate) struct WeightedTerms {
    pub treated: Vec<f64>,
    pub control: Vec<f64>,
    pub residual: Vec<f64>,
    /// Empty when there is no in-sample augmentation.
    pub augmentation: Vec<f64>,
}

/// Returns the estimate and centered influence values (nuisance fits held
/// fixed).
pub(crate) fn combine(terms: &WeightedTerms, stabilized: bool) -> Result<(f64, Vec<f64>)> {
    let n = terms.residual.len();
    let nf = n as f64;
    let aug = |i: usize| terms.augmentation.get(i).copied().unwrap_or(0.0);

    if !stabilized {
        let psi: Vec<f64> = (0..n)
            .map(|i| (terms.treated[i] - terms.control[i]) * terms.residual[i] + aug(i))
            .collect();
        let est = psi.iter().sum::<f64>() / nf;
        return Ok((est, psi.iter().map(|p| p - est).collect()));
    }

    let sum_a: f64 = terms.treated.iter().sum();
    let sum_b: f64 = terms.control.iter().sum();
    if !(sum_a > 0.0) {
        return Err(Error::DegenerateArm("treated arm has zero total weight".into()));
    }
    if !(sum_b > 0.0) {
        return Err(Error::DegenerateArm("control arm has zero total weight".into()));
    }
    let h1 = terms.treated.iter().zip(&terms.residual).map(|(a, r)| a * r).sum::<f64>() / sum_a;
    let h0 = terms.control.iter().zip(&terms.residual).map(|(b, r)| b * r).sum::<f64>() / sum_b;
    let d_bar = if terms.augmentation.is_empty() {
        0.0
    } else {
        terms.augmentation.iter().sum::<f64>() / nf
    };
    let (mean_a, mean_b) = (sum_a / nf, sum_b / nf);
    let infl = (0..n)
        .map(|i| {
            let r = terms.residual[i];
            terms.treated[i] * (r - h1) / mean_a - terms.control[i] * (r - h0) / mean_b + aug(i)
                - d_bar
        })
        .collect();
    Ok((h1 - h0 + d_bar, infl))
}

/// Enforces the probability floor: errors when unstabilized, clamps when
/// stabilized.
pub(crate) fn guard_probabilities(probs: &mut [f64], floor: f64, stabilized: bool) -> Result<()> {
    for (row, p) in probs.iter_mut().enumerate() {
        if *p < floor || *p > 1.0 - floor || !p.is_finite() {
            if stabilized && p.is_finite() {
                *p = p.clamp(floor, 1.0 - floor);
            } else {
                return Err(Error::ExtremeWeight {
                    row,
                    value: *p,
                    floor,
                });
            }
        }
    }
    Ok(())
}
