//! Stacked-moment (sandwich) variance of the observational AIPW estimator.
//!
//! Parameters are `θ = (β, α₀, α₁, η)` with moment functions
//!
//! ```text
//! g    = μ₁ - μ₀ + A(Y - μ₁)/π - (1 - A)(Y - μ₀)/(1 - π) - β
//! m_α₀ = (1 - A) x̃ (Y - x̃ᵀα₀)
//! m_α₁ = A x̃ (Y - x̃ᵀα₁)
//! m_η  = x̃ (A - expit(x̃ᵀη))
//! ```
//!
//! The Jacobian of `m` is block diagonal, so the corrected influence value is
//! `g - Σ_b G_b M_b⁻¹ m_b` with `G_b = E[∂g/∂φ_b]` and `M_b = E[∂m_b/∂φ_b]`.

use super::ate::{fit_propensity, require_both_arms, require_source, OutcomeModels};
use super::{Dataset, EstimateSummary, EstimatorOptions, Source};
use super::weighting::guard_probabilities;
use crate::error::{Error, Result};
use crate::math::{cholesky_solve, dot, Matrix};

/// `u = H⁻¹ G` for `H = -M` (positive definite for a non-degenerate fit).
fn correction(design: &Matrix, weights: &[f64], g_block: &[f64], name: &str) -> Result<Vec<f64>> {
    let n = design.nrows() as f64;
    let h: Vec<f64> = design
        .weighted_gram(Some(weights))
        .into_iter()
        .map(|v| v / n)
        .collect();
    cholesky_solve(&h, g_block).map_err(|e| match e {
        Error::SingularDesign { column } => {
            Error::SingularJacobian(format!("{name} block is singular at column {column}"))
        }
        other => other,
    })
}

/// Sandwich-corrected influence values and the AIPW estimate.
fn corrected_influence(data: &Dataset) -> Result<(f64, Vec<f64>)> {
    require_source(data, Source::Obs)?;
    require_both_arms(data)?;
    let x = data.covariates().with_intercept();
    let n = data.len();
    let nf = n as f64;
    let p = x.ncols();

    let propensity = fit_propensity(data)?;
    let mut pi = propensity.predict(&x);
    guard_probabilities(&mut pi, EstimatorOptions::default().weight_floor, false)?;
    let models = OutcomeModels::fit(data)?;
    let (mu0, mu1) = models.predict(data);
    let y = data.outcome();
    let a: Vec<f64> = data.treatment().iter().map(|&v| f64::from(v)).collect();

    let raw: Vec<f64> = (0..n)
        .map(|i| {
            mu1[i] - mu0[i] + a[i] * (y[i] - mu1[i]) / pi[i]
                - (1.0 - a[i]) * (y[i] - mu0[i]) / (1.0 - pi[i])
        })
        .collect();
    let beta = raw.iter().sum::<f64>() / nf;

    let mut g_a0 = vec![0.0; p];
    let mut g_a1 = vec![0.0; p];
    let mut g_eta = vec![0.0; p];
    for i in 0..n {
        let row = x.row(i);
        let c0 = -1.0 + (1.0 - a[i]) / (1.0 - pi[i]);
        let c1 = 1.0 - a[i] / pi[i];
        let ce = -a[i] * (y[i] - mu1[i]) * (1.0 - pi[i]) / pi[i]
            - (1.0 - a[i]) * (y[i] - mu0[i]) * pi[i] / (1.0 - pi[i]);
        for j in 0..p {
            g_a0[j] += c0 * row[j] / nf;
            g_a1[j] += c1 * row[j] / nf;
            g_eta[j] += ce * row[j] / nf;
        }
    }

    let control_w: Vec<f64> = a.iter().map(|v| 1.0 - v).collect();
    let eta_w: Vec<f64> = pi.iter().map(|p| p * (1.0 - p)).collect();
    let u0 = correction(&x, &control_w, &g_a0, "alpha_o0")?;
    let u1 = correction(&x, &a, &g_a1, "alpha_o1")?;
    let ue = correction(&x, &eta_w, &g_eta, "eta")?;

    let infl = (0..n)
        .map(|i| {
            let row = x.row(i);
            let lin = dot(row, &u0) * (1.0 - a[i]) * (y[i] - mu0[i])
                + dot(row, &u1) * a[i] * (y[i] - mu1[i])
                + dot(row, &ue) * (a[i] - pi[i]);
            raw[i] - beta + lin
        })
        .collect();
    Ok((beta, infl))
}

/// Sandwich estimate of `σ̂²` for the observational AIPW estimator.
pub fn sandwich_variance_obs_aipw(data: &Dataset) -> Result<f64> {
    let (_, infl) = corrected_influence(data)?;
    Ok(infl.iter().map(|v| v * v).sum::<f64>() / infl.len() as f64)
}

/// Observational AIPW with the sandwich standard error.
pub fn obs_aipw_sandwich(data: &Dataset) -> Result<EstimateSummary> {
    let (beta, infl) = corrected_influence(data)?;
    Ok(EstimateSummary::from_influence(beta, &infl, "obs_aipw_sandwich"))
}
