//! Gaussian verification model with a known influence-function scale.
//!
//! ```text
//! trial:          A ~ Bern(π_c),  Y | A, X ~ N((A - ½)β⋆ + γ_cᵀX, σ_c²)
//! observational:  A ~ Bern(π_o),  U ~ N(-(A - ½)Δ, σ_o²/2),
//!                 Y | A, X, U ~ N((A - ½)β⋆ + U + γ_oᵀX, σ_o²/2)
//! ```
//!
//! Both studies are analyzed by difference in means with the known scale
//! `σ_IF = √((σ² + |γ|²)/(π(1 - π)))`, so `se_c = σ_IF,c/√n_c`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{Dataset, EstimateSummary, Source};
use crate::fusion::{
    amse_pooled, amse_rct, anchored_threshold, naive_pool, oracle_ci, oracle_estimate, rct_ci,
    FusionConfig,
};
use crate::math::{derive_seed, normal_quantile, Matrix, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model1Params {
    pub beta_star: f64,
    pub delta: f64,
    pub sigma_c: f64,
    pub sigma_o: f64,
    pub n_c: usize,
    pub n_o: usize,
    pub pi_c: f64,
    pub pi_o: f64,
    pub gamma_c: Vec<f64>,
    pub gamma_o: Vec<f64>,
}

impl Model1Params {
    /// No covariates, `π = ½` in both studies.
    pub fn simple(n_c: usize, n_o: usize, sigma: f64, delta: f64) -> Self {
        Self {
            beta_star: 0.0,
            delta,
            sigma_c: sigma,
            sigma_o: sigma,
            n_c,
            n_o,
            pi_c: 0.5,
            pi_o: 0.5,
            gamma_c: vec![],
            gamma_o: vec![],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_c < 2 || self.n_o < 2 {
            return Err(Error::domain("the Gaussian model needs at least 2 rows per study"));
        }
        if !(self.sigma_c > 0.0 && self.sigma_o > 0.0) {
            return Err(Error::domain("Gaussian model sigmas must be positive"));
        }
        for p in [self.pi_c, self.pi_o] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::domain(format!("assignment probability {p} outside (0, 1)")));
            }
        }
        if self.gamma_c.len() != self.gamma_o.len() {
            return Err(Error::domain("gamma_c and gamma_o must have the same length"));
        }
        Ok(())
    }

    pub fn sigma_if_c(&self) -> f64 {
        let g2: f64 = self.gamma_c.iter().map(|g| g * g).sum();
        ((self.sigma_c.powi(2) + g2) / (self.pi_c * (1.0 - self.pi_c))).sqrt()
    }

    pub fn sigma_if_o(&self) -> f64 {
        let g2: f64 = self.gamma_o.iter().map(|g| g * g).sum();
        ((self.sigma_o.powi(2) + g2) / (self.pi_o * (1.0 - self.pi_o))).sqrt()
    }

    /// Trial standard error `σ_IF,c/√n_c`, the phase-transition scale.
    pub fn se_c(&self) -> f64 {
        self.sigma_if_c() / (self.n_c as f64).sqrt()
    }

    pub fn amse_rct(&self) -> f64 {
        amse_rct(self.sigma_if_c(), self.n_c as f64)
    }

    pub fn amse_pooled(&self) -> f64 {
        amse_pooled(
            self.sigma_if_c(),
            self.sigma_if_o(),
            self.n_c as f64,
            self.n_o as f64,
            self.delta,
        )
    }
}

pub fn model1_generate(params: &Model1Params, rng: &mut Rng) -> Result<(Dataset, Dataset)> {
    params.validate()?;
    let p = params.gamma_c.len();
    let mut study = |n: usize, pi: f64, gamma: &[f64], obs: bool| -> Result<Dataset> {
        let mut x = Matrix::zeros(n, p);
        let (mut y, mut a) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n {
            let t = rng.bernoulli(pi);
            let centered = f64::from(t) - 0.5;
            let mut mean = centered * params.beta_star;
            for (j, g) in gamma.iter().enumerate() {
                let v = rng.normal();
                x.set(i, j, v);
                mean += g * v;
            }
            let noise = if obs {
                let s = params.sigma_o / 2f64.sqrt();
                let u = -centered * params.delta + s * rng.normal();
                u + s * rng.normal()
            } else {
                params.sigma_c * rng.normal()
            };
            y.push(mean + noise);
            a.push(t);
        }
        Dataset::new(y, a, x, if obs { Source::Obs } else { Source::Rct })
    };
    let rct = study(params.n_c, params.pi_c, &params.gamma_c, false)?;
    let obs = study(params.n_o, params.pi_o, &params.gamma_o, true)?;
    Ok((rct, obs))
}

/// `ȳ₁ - ȳ₀`; `None` when an arm is empty.
pub fn difference_in_means(data: &Dataset) -> Option<f64> {
    let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0usize, 0.0, 0usize);
    for (y, &a) in data.outcome().iter().zip(data.treatment()) {
        if a == 1 {
            s1 += y;
            n1 += 1;
        } else {
            s0 += y;
            n0 += 1;
        }
    }
    (n1 > 0 && n0 > 0).then(|| s1 / n1 as f64 - s0 / n0 as f64)
}

/// Difference-in-means summaries of one Gaussian-model draw with known scales.
pub fn model1_summaries(params: &Model1Params, rng: &mut Rng) -> Result<(EstimateSummary, EstimateSummary)> {
    let (rct, obs) = model1_generate(params, rng)?;
    let arm_err = || Error::DegenerateArm("Gaussian-model draw has an empty arm".into());
    let c = difference_in_means(&rct).ok_or_else(arm_err)?;
    let o = difference_in_means(&obs).ok_or_else(arm_err)?;
    Ok((
        EstimateSummary::from_sigma(c, params.sigma_if_c(), params.n_c, "dim_c"),
        EstimateSummary::from_sigma(o, params.sigma_if_o(), params.n_o, "dim_o"),
    ))
}

fn replicate_all<T: Send>(
    reps: usize,
    seed: u64,
    f: impl Fn(&mut Rng) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    if reps < 2 {
        return Err(Error::domain("Gaussian-model checks need at least 2 replications"));
    }
    (0..reps)
        .into_par_iter()
        .map(|i| f(&mut Rng::new(derive_seed(seed, i as u64))))
        .collect()
}

/// Mean of squared errors and its Monte Carlo standard error.
fn mse_with_se(errors: impl Iterator<Item = f64>) -> (f64, f64) {
    let sq: Vec<f64> = errors.map(|e| e * e).collect();
    let n = sq.len() as f64;
    let m = sq.iter().sum::<f64>() / n;
    let v = sq.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmseReport {
    pub delta: f64,
    pub mse_rct: f64,
    pub mse_rct_se: f64,
    pub mse_pooled: f64,
    pub mse_pooled_se: f64,
    pub amse_rct: f64,
    pub amse_pooled: f64,
    pub rel_err_rct: f64,
    pub rel_err_pooled: f64,
}

/// Empirical MSE of the trial and pooled estimators against the asymptotic
/// formulas.
pub fn verify_amse(params: &Model1Params, replications: usize, seed: u64) -> Result<AmseReport> {
    let draws = replicate_all(replications, seed, |rng| {
        let (c, o) = model1_summaries(params, rng)?;
        Ok((c.estimate, naive_pool(&c, &o)?.estimate))
    })?;
    let (mse_rct, mse_rct_se) = mse_with_se(draws.iter().map(|d| d.0 - params.beta_star));
    let (mse_pooled, mse_pooled_se) = mse_with_se(draws.iter().map(|d| d.1 - params.beta_star));
    let (ar, ap) = (params.amse_rct(), params.amse_pooled());
    Ok(AmseReport {
        delta: params.delta,
        mse_rct,
        mse_rct_se,
        mse_pooled,
        mse_pooled_se,
        amse_rct: ar,
        amse_pooled: ap,
        rel_err_rct: (mse_rct - ar).abs() / ar,
        rel_err_pooled: (mse_pooled - ap).abs() / ap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub delta_bar: f64,
    pub alpha: f64,
    pub replications: usize,
    pub oracle_coverage: f64,
    pub rct_coverage: f64,
    pub oracle_mean_width: f64,
    pub rct_mean_width: f64,
    /// Every pooling-branch oracle interval contained the naive z-interval.
    pub oracle_never_shorter: bool,
}

pub fn verify_coverage(
    params: &Model1Params,
    delta_bar: f64,
    alpha: f64,
    replications: usize,
    seed: u64,
) -> Result<CoverageReport> {
    if params.delta.abs() > delta_bar {
        return Err(Error::domain(format!(
            "coverage check needs |delta| <= delta_bar, got {} > {delta_bar}",
            params.delta.abs()
        )));
    }
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let draws = replicate_all(replications, seed, |rng| {
        let (c, o) = model1_summaries(params, rng)?;
        let orc = oracle_ci(&c, &o, delta_bar, alpha)?;
        let rc = rct_ci(&c, alpha)?;
        let pool = naive_pool(&c, &o)?;
        let nested = orc.lower <= pool.estimate - z * pool.standard_error
            && orc.upper >= pool.estimate + z * pool.standard_error;
        Ok((orc, rc, nested))
    })?;
    let n = draws.len() as f64;
    let b = params.beta_star;
    Ok(CoverageReport {
        delta_bar,
        alpha,
        replications,
        oracle_coverage: draws.iter().filter(|d| d.0.contains(b)).count() as f64 / n,
        rct_coverage: draws.iter().filter(|d| d.1.contains(b)).count() as f64 / n,
        oracle_mean_width: draws.iter().map(|d| d.0.width()).sum::<f64>() / n,
        rct_mean_width: draws.iter().map(|d| d.1.width()).sum::<f64>() / n,
        oracle_never_shorter: draws.iter().all(|d| d.2),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub delta: f64,
    pub estimator: String,
    pub mse: f64,
}

/// MSE of the trial, pooled, oracle (`Δ̄ = |Δ|`) and thresholding estimators
/// across `delta_grid`. Each grid point reuses the same seed stream.
pub fn phase_sweep(
    params: &Model1Params,
    delta_grid: &[f64],
    lambda1: f64,
    replications: usize,
    seed: u64,
) -> Result<Vec<PhaseRow>> {
    let config = FusionConfig {
        lambda1,
        ..FusionConfig::default()
    };
    config.validate()?;
    let mut rows = Vec::with_capacity(4 * delta_grid.len());
    for &delta in delta_grid {
        let p = Model1Params {
            delta,
            ..params.clone()
        };
        let draws = replicate_all(replications, seed, |rng| {
            let (c, o) = model1_summaries(&p, rng)?;
            Ok([
                c.estimate,
                naive_pool(&c, &o)?.estimate,
                oracle_estimate(&c, &o, delta.abs())?.estimate,
                anchored_threshold(&c, &o, &config)?.beta_lambda,
            ])
        })?;
        for (k, name) in ["rct", "naive_pool", "oracle", "lambda"].iter().enumerate() {
            let (mse, _) = mse_with_se(draws.iter().map(|d| d[k] - p.beta_star));
            rows.push(PhaseRow {
                delta,
                estimator: name.to_string(),
                mse,
            });
        }
    }
    Ok(rows)
}

/// MSE of `estimator` at `delta` in a sweep.
pub fn phase_mse(rows: &[PhaseRow], delta: f64, estimator: &str) -> Option<f64> {
    rows.iter()
        .find(|r| r.delta == delta && r.estimator == estimator)
        .map(|r| r.mse)
}
