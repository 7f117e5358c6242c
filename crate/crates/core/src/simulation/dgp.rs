//! Population, trial-selection and observational data-generating processes.
//!
//! ```text
//! X₁, X₂, X₃, ε ~ N(0, 1)
//! Y(0) = X₁ + X₂ + X₃ + ε,   Y(1) = Y(0) + β(X)
//! P(S = c | X) = expit(-7 + X₁ - X₂),   A | S = c ~ Bern(1/2)
//! A (observational) ~ Bern(expit(1 - X₁ - b·X₃)), X₃ unobserved
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{obs_aipw, obs_ipw, Dataset, EstimatorKind, Source};
use crate::math::{expit, Matrix, Rng};

/// Population average treatment effect under both effect models.
pub const BETA_STAR: f64 = 2.0;

/// Trial assignment probability.
pub const PI_C: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    /// `β(X) = 2`.
    Constant,
    /// `β(X) = 2 - X₁ - X₂`.
    Heterogeneous,
}

impl Effect {
    pub fn beta(self, x1: f64, x2: f64) -> f64 {
        match self {
            Effect::Constant => BETA_STAR,
            Effect::Heterogeneous => BETA_STAR - x1 - x2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Effect::Constant => "constant",
            Effect::Heterogeneous => "heterogeneous",
        }
    }
}

/// Full potential-outcome table.
#[derive(Debug, Clone)]
pub struct Population {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub x3: Vec<f64>,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.x1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }
}

pub fn generate_population(effect: Effect, n: usize, rng: &mut Rng) -> Population {
    let mut p = Population {
        x1: Vec::with_capacity(n),
        x2: Vec::with_capacity(n),
        x3: Vec::with_capacity(n),
        y0: Vec::with_capacity(n),
        y1: Vec::with_capacity(n),
    };
    for _ in 0..n {
        let (x1, x2, x3, eps) = (rng.normal(), rng.normal(), rng.normal(), rng.normal());
        let y0 = x1 + x2 + x3 + eps;
        p.x1.push(x1);
        p.x2.push(x2);
        p.x3.push(x3);
        p.y0.push(y0);
        p.y1.push(y0 + effect.beta(x1, x2));
    }
    p
}

/// Log-odds of trial participation.
pub fn selection_logit(x1: f64, x2: f64) -> f64 {
    -7.0 + x1 - x2
}

/// Bernoulli trial selection followed by 1:1 randomization. Returns `None`
/// when no row is selected. Covariates are `(X₁, X₂, X₃)`.
pub fn select_rct(population: &Population, rng: &mut Rng) -> Option<Dataset> {
    let (mut y, mut a, mut x1, mut x2, mut x3) = (vec![], vec![], vec![], vec![], vec![]);
    for i in 0..population.len() {
        if rng.bernoulli(expit(selection_logit(population.x1[i], population.x2[i]))) == 0 {
            continue;
        }
        let t = rng.bernoulli(PI_C);
        y.push(if t == 1 { population.y1[i] } else { population.y0[i] });
        a.push(t);
        x1.push(population.x1[i]);
        x2.push(population.x2[i]);
        x3.push(population.x3[i]);
    }
    if y.is_empty() {
        return None;
    }
    let n = y.len();
    let x = Matrix::from_columns(&[x1, x2, x3], n).expect("columns share length");
    Some(Dataset::new(y, a, x, Source::Rct).expect("generated rows are valid"))
}

/// Observational sample with all three covariates; [`generate_obs`] hides `X₃`.
pub fn generate_obs_full(effect: Effect, n_obs: usize, b: f64, rng: &mut Rng) -> Dataset {
    let pop = generate_population(effect, n_obs, rng);
    let a: Vec<u8> = (0..n_obs)
        .map(|i| rng.bernoulli(expit(1.0 - pop.x1[i] - b * pop.x3[i])))
        .collect();
    let y: Vec<f64> = (0..n_obs)
        .map(|i| if a[i] == 1 { pop.y1[i] } else { pop.y0[i] })
        .collect();
    let x = Matrix::from_columns(&[pop.x1, pop.x2, pop.x3], n_obs).expect("columns share length");
    Dataset::new(y, a, x, Source::Obs).expect("generated rows are valid")
}

/// Observational sample exposing only `(Y, A, X₁, X₂)`.
pub fn generate_obs(effect: Effect, n_obs: usize, b: f64, rng: &mut Rng) -> Dataset {
    generate_obs_full(effect, n_obs, b, rng).project_covariates(&[0, 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasOracle {
    /// `Δ = β⋆ - β_o` with `β_o` the large-sample observational estimate.
    pub delta: f64,
    /// Standard error of `delta` at the oracle sample size.
    pub se: f64,
    pub n_oracle: usize,
}

/// Monte Carlo internal-validity bias of an observational estimator: the
/// estimator is run once on `n_oracle` fresh rows and subtracted from `β⋆`.
pub fn true_bias_oracle(
    effect: Effect,
    b: f64,
    kind: EstimatorKind,
    n_oracle: usize,
    rng: &mut Rng,
) -> Result<BiasOracle> {
    let data = generate_obs(effect, n_oracle, b, rng);
    let s = match kind {
        EstimatorKind::ObsIpw => obs_ipw(&data)?,
        EstimatorKind::ObsAipw => obs_aipw(&data)?,
        other => {
            return Err(Error::domain(format!(
                "bias oracle needs an observational estimator, got {other:?}"
            )))
        }
    };
    Ok(BiasOracle {
        delta: BETA_STAR - s.estimate,
        se: s.standard_error,
        n_oracle,
    })
}
