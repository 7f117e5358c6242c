//! Fusion of a trial estimate with an observational estimate: naive
//! pooling, anchored thresholding, the oracle estimator and confidence
//! intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimateSummary;
use crate::math::normal_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub lambda1: f64,
    /// Used verbatim instead of `λ₁·√ln min(n_c, n_o)`. Zero is allowed.
    pub lambda_override: Option<f64>,
    pub alpha: f64,
    /// Oracle bias bound `Δ̄`.
    pub delta_bar: Option<f64>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.5,
            lambda_override: None,
            alpha: 0.05,
            delta_bar: None,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 > 0.0 && self.lambda1.is_finite()) {
            return Err(Error::domain(format!("lambda1 must be positive, got {}", self.lambda1)));
        }
        if let Some(l) = self.lambda_override {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::domain(format!("lambda must be nonnegative, got {l}")));
            }
        }
        check_alpha(self.alpha)?;
        if let Some(d) = self.delta_bar {
            check_delta_bar(d)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionResult {
    pub omega_hat: f64,
    /// `Δ̃ = β̂_c - β̂_o`.
    pub tilde_delta: f64,
    /// `λ·√(se_c² + se_o²)`.
    pub threshold: f64,
    /// `Δ̂_λ`.
    pub delta_hat: f64,
    /// `β̂_λ`.
    pub beta_lambda: f64,
    pub thresholded_to_zero: bool,
    pub lambda_used: f64,
    /// Naively pooled estimate `β̂_ω` and its standard error.
    pub beta_pool: f64,
    pub se_pool: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IntervalMethod {
    RctOnly,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalResult {
    pub lower: f64,
    pub upper: f64,
    pub method: IntervalMethod,
    pub alpha: f64,
}

impl IntervalResult {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha must be in (0, 1), got {alpha}")))
    }
}

fn check_delta_bar(delta_bar: f64) -> Result<()> {
    if delta_bar >= 0.0 && delta_bar.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("delta_bar must be nonnegative, got {delta_bar}")))
    }
}

fn check_se(s: &EstimateSummary, which: &str) -> Result<f64> {
    let se = s.standard_error;
    if se > 0.0 && se.is_finite() && s.estimate.is_finite() {
        Ok(se)
    } else {
        Err(Error::domain(format!(
            "{which} summary needs a positive standard error and finite estimate, got ({}, {se})",
            s.estimate
        )))
    }
}

/// `ω̂ = se_c² / (se_c² + se_o²)`.
pub fn pooled_weight(c: &EstimateSummary, o: &EstimateSummary) -> Result<f64> {
    let vc = check_se(c, "trial")?.powi(2);
    let vo = check_se(o, "observational")?.powi(2);
    Ok(vc / (vc + vo))
}

/// `β̂_ω = (1 - ω̂)β̂_c + ω̂β̂_o` with SE `se_c·se_o/√(se_c² + se_o²)`.
pub fn naive_pool(c: &EstimateSummary, o: &EstimateSummary) -> Result<EstimateSummary> {
    let w = pooled_weight(c, o)?;
    let (sc, so) = (c.standard_error, o.standard_error);
    let se = sc * so / sc.hypot(so);
    EstimateSummary::from_standard_error(
        (1.0 - w) * c.estimate + w * o.estimate,
        se,
        c.n + o.n,
        "naive_pool",
    )
}

pub fn choose_lambda(config: &FusionConfig, n_c: usize, n_o: usize) -> Result<f64> {
    if let Some(l) = config.lambda_override {
        return Ok(l);
    }
    let n = n_c.min(n_o);
    if n < 2 {
        return Err(Error::domain(format!(
            "min(n_c, n_o) = {n}; lambda needs both sizes >= 2 unless overridden"
        )));
    }
    Ok(config.lambda1 * (n as f64).ln().sqrt())
}

/// `sgn(x)·max(|x| - t, 0)`; `|x| == t` maps to zero.
pub fn soft_threshold(tilde_delta: f64, threshold: f64) -> f64 {
    if tilde_delta.abs() <= threshold {
        0.0
    } else {
        tilde_delta.signum() * (tilde_delta.abs() - threshold)
    }
}

/// Anchored thresholding estimator `β̂_λ = (1 - ω̂)β̂_c + ω̂(β̂_o + Δ̂_λ)`.
pub fn anchored_threshold(
    c: &EstimateSummary,
    o: &EstimateSummary,
    config: &FusionConfig,
) -> Result<FusionResult> {
    config.validate()?;
    let omega = pooled_weight(c, o)?;
    if o.n <= c.n {
        log::warn!(
            "observational sample ({}) is not larger than the trial ({}); fusion gains are not expected",
            o.n,
            c.n
        );
    }
    let lambda = choose_lambda(config, c.n, o.n)?;
    let threshold = lambda * c.standard_error.hypot(o.standard_error);
    let tilde = c.estimate - o.estimate;
    let delta_hat = soft_threshold(tilde, threshold);
    let pool = naive_pool(c, o)?;
    // Both branches equal (1 - ω)β_c + ω(β_o + Δ̂).
    let beta_lambda = if delta_hat == 0.0 {
        pool.estimate
    } else {
        c.estimate - omega * (tilde - delta_hat)
    };
    Ok(FusionResult {
        omega_hat: omega,
        tilde_delta: tilde,
        threshold,
        delta_hat,
        beta_lambda,
        thresholded_to_zero: delta_hat == 0.0,
        lambda_used: lambda,
        beta_pool: pool.estimate,
        se_pool: pool.standard_error,
    })
}

/// RCT-only when `Δ̄ ≥ se_c`, naive pool otherwise.
pub fn oracle_estimate(
    c: &EstimateSummary,
    o: &EstimateSummary,
    delta_bar: f64,
) -> Result<EstimateSummary> {
    check_delta_bar(delta_bar)?;
    if delta_bar >= check_se(c, "trial")? {
        Ok(c.clone())
    } else {
        naive_pool(c, o)
    }
}

/// `β̂_c ± z_{1-α/2}·se_c`.
pub fn rct_ci(c: &EstimateSummary, alpha: f64) -> Result<IntervalResult> {
    check_alpha(alpha)?;
    let half = normal_quantile(1.0 - alpha / 2.0)? * check_se(c, "trial")?;
    Ok(IntervalResult {
        lower: c.estimate - half,
        upper: c.estimate + half,
        method: IntervalMethod::RctOnly,
        alpha,
    })
}

/// Oracle interval: [`rct_ci`] when `Δ̄ ≥ se_c`, otherwise
/// `β̂_ω ± (z_{1-α/2}·se_pool + Δ̄)`.
pub fn oracle_ci(
    c: &EstimateSummary,
    o: &EstimateSummary,
    delta_bar: f64,
    alpha: f64,
) -> Result<IntervalResult> {
    check_alpha(alpha)?;
    check_delta_bar(delta_bar)?;
    if delta_bar >= check_se(c, "trial")? {
        return rct_ci(c, alpha);
    }
    let pool = naive_pool(c, o)?;
    let half = normal_quantile(1.0 - alpha / 2.0)? * pool.standard_error + delta_bar;
    Ok(IntervalResult {
        lower: pool.estimate - half,
        upper: pool.estimate + half,
        method: IntervalMethod::Oracle,
        alpha,
    })
}

/// `σ_c²/n_c`.
pub fn amse_rct(sigma_c: f64, n_c: f64) -> f64 {
    sigma_c * sigma_c / n_c
}

/// `σ_c²σ_o²/(n_cσ_o² + n_oσ_c²) + ω²Δ²` with
/// `ω = (σ_c²/n_c)/(σ_c²/n_c + σ_o²/n_o)`.
pub fn amse_pooled(sigma_c: f64, sigma_o: f64, n_c: f64, n_o: f64, delta: f64) -> f64 {
    let (vc, vo) = (sigma_c * sigma_c, sigma_o * sigma_o);
    let omega = (vc / n_c) / (vc / n_c + vo / n_o);
    vc * vo / (n_c * vo + n_o * vc) + omega * omega * delta * delta
}
