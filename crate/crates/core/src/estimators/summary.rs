use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point estimate with its influence-function scale: the interchange unit
/// between row-level estimation and fusion.
///
/// `standard_error == sigma_hat / √n`. A degenerate dataset (for example all
/// outcomes zero) yields `sigma_hat == 0`; fusion rejects such summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub estimate: f64,
    pub standard_error: f64,
    pub n: usize,
    pub sigma_hat: f64,
    pub label: String,
}

impl EstimateSummary {
    /// From centered influence values `ψᵢ`: `σ̂² = n⁻¹ Σ ψᵢ²`.
    pub fn from_influence(estimate: f64, influence: &[f64], label: impl Into<String>) -> Self {
        let n = influence.len();
        let sigma_hat = (influence.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        Self {
            estimate,
            standard_error: sigma_hat / (n as f64).sqrt(),
            n,
            sigma_hat,
            label: label.into(),
        }
    }

    /// From a reported standard error; `σ̂` is reconstructed as `se·√n`.
    pub fn from_standard_error(
        estimate: f64,
        standard_error: f64,
        n: usize,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(standard_error > 0.0 && standard_error.is_finite()) {
            return Err(Error::domain(format!(
                "standard error must be positive and finite, got {standard_error}"
            )));
        }
        if n == 0 {
            return Err(Error::domain("sample size must be positive"));
        }
        if !estimate.is_finite() {
            return Err(Error::domain("estimate must be finite"));
        }
        Ok(Self {
            estimate,
            standard_error,
            n,
            sigma_hat: standard_error * (n as f64).sqrt(),
            label: label.into(),
        })
    }

    /// From a known influence-function standard deviation.
    pub fn from_sigma(estimate: f64, sigma: f64, n: usize, label: impl Into<String>) -> Self {
        Self {
            estimate,
            standard_error: sigma / (n as f64).sqrt(),
            n,
            sigma_hat: sigma,
            label: label.into(),
        }
    }

    /// `se²`, i.e. `σ̂²/n`.
    pub fn variance(&self) -> f64 {
        self.standard_error * self.standard_error
    }
}
