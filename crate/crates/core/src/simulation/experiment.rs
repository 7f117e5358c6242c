//! Monte Carlo replication engine and MSE-ratio reports.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{
    generate_obs, generate_population, select_rct, true_bias_oracle, BiasOracle, Effect,
    BETA_STAR, PI_C,
};
use crate::error::{Error, Result};
use crate::estimators::{
    fit_participation, obs_aipw_with, obs_ipw_with, rct_aipw_with, rct_aippw_with, rct_ipw_with,
    rct_ippw_with, split_obs, EstimateSummary, EstimatorKind, EstimatorOptions, RctDesign,
};
use crate::fusion::{anchored_threshold, naive_pool, oracle_estimate, pooled_weight, FusionConfig};
use crate::math::{derive_seed, Rng};

/// Confounding strengths of the published factor grid.
pub const B_GRID: [f64; 9] = [0.0, 0.01, 0.1, 0.5, 0.6, 0.7, 2.0, 3.0, 10.0];

/// Allowed observational sample sizes.
pub const N_OBS_GRID: [usize; 3] = [10_000, 50_000, 100_000];

/// Attempts at drawing a nonempty trial before a replicate fails.
const MAX_SELECTION_ATTEMPTS: u64 = 16;

/// Share of failed replicates above which an experiment aborts.
const MAX_FAILURE_SHARE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorPair {
    /// Trial IPW with observational IPW on all of O.
    Ipw,
    /// Trial AIPW with observational AIPW on all of O.
    Aipw,
    /// Trial IPPW with observational IPW on O₂.
    Ippw,
    /// Trial AIPPW with observational AIPW on O₂.
    Aippw,
}

impl EstimatorPair {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorPair::Ipw => "ipw",
            EstimatorPair::Aipw => "aipw",
            EstimatorPair::Ippw => "ippw",
            EstimatorPair::Aippw => "aippw",
        }
    }

    pub fn obs_kind(self) -> EstimatorKind {
        match self {
            EstimatorPair::Ipw | EstimatorPair::Ippw => EstimatorKind::ObsIpw,
            EstimatorPair::Aipw | EstimatorPair::Aippw => EstimatorKind::ObsAipw,
        }
    }

    pub fn uses_split(self) -> bool {
        matches!(self, EstimatorPair::Ippw | EstimatorPair::Aippw)
    }

    /// The pair used for `effect` in the published design.
    pub fn for_effect(effect: Effect, augmented: bool) -> Self {
        match (effect, augmented) {
            (Effect::Constant, false) => EstimatorPair::Ipw,
            (Effect::Constant, true) => EstimatorPair::Aipw,
            (Effect::Heterogeneous, false) => EstimatorPair::Ippw,
            (Effect::Heterogeneous, true) => EstimatorPair::Aippw,
        }
    }
}

/// Denominator of the MSE ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// RCT-only when `|Δ| ≥ se_c`, naive pool otherwise.
    Dichotomous,
    /// `(1 - ω̂)β̂_c + ω̂(β̂_o + Δ)`.
    BiasCorrectedPool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub effect: Effect,
    pub n_population: usize,
    pub n_obs: usize,
    pub confounding_b: f64,
    pub estimator_pair: EstimatorPair,
    pub lambda1_grid: Vec<f64>,
    pub replications: usize,
    pub base_seed: u64,
    /// Rows used by the bias oracle.
    pub n_oracle: usize,
    pub oracle: OracleKind,
    /// Use the mean-normalized weight forms of every estimator.
    pub stabilized: bool,
}

impl Scenario {
    pub fn new(effect: Effect, n_obs: usize, b: f64, pair: EstimatorPair, replications: usize, seed: u64) -> Self {
        Self {
            effect,
            n_population: 100_000,
            n_obs,
            confounding_b: b,
            estimator_pair: pair,
            lambda1_grid: vec![0.5, 0.6],
            replications,
            base_seed: seed,
            n_oracle: 1_000_000,
            oracle: OracleKind::Dichotomous,
            stabilized: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::domain("replications must be at least 1"));
        }
        if self.n_population < 1 || self.n_obs < 2 {
            return Err(Error::domain("population and observational sizes must be positive"));
        }
        if !(self.confounding_b >= 0.0 && self.confounding_b.is_finite()) {
            return Err(Error::domain(format!("b must be nonnegative, got {}", self.confounding_b)));
        }
        if let Some(l) = self.lambda1_grid.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
            return Err(Error::domain(format!("lambda1 values must be nonnegative, got {l}")));
        }
        Ok(())
    }

    /// Seed of replicate `index`.
    pub fn replicate_seed(&self, index: usize) -> u64 {
        derive_seed(self.base_seed, index as u64)
    }

    /// Seed of the bias oracle, distinct from every replicate stream.
    pub fn oracle_seed(&self) -> u64 {
        derive_seed(self.base_seed ^ 0x6f72_6163_6c65, u64::MAX)
    }
}

/// Estimates from one simulated (trial, observational) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub index: usize,
    pub seed: u64,
    pub n_c: usize,
    /// Size of the observational sample the estimator used (`O` or `O₂`).
    pub n_o: usize,
    pub beta_c: f64,
    pub se_c: f64,
    pub beta_o: f64,
    pub se_o: f64,
    pub beta_pool: f64,
    pub beta_orac: f64,
    /// One entry per `lambda1_grid` value.
    pub beta_lambda: Vec<f64>,
    /// Extra trial draws needed because none was selected.
    pub selection_retries: u64,
}

fn draw_rct(scenario: &Scenario, rng: &mut Rng, seed: u64) -> Result<(crate::Dataset, u64)> {
    for attempt in 0..MAX_SELECTION_ATTEMPTS {
        let mut r = if attempt == 0 {
            Rng::new(rng.next_u64())
        } else {
            Rng::new(derive_seed(seed, attempt))
        };
        let pop = generate_population(scenario.effect, scenario.n_population, &mut r);
        if let Some(rct) = select_rct(&pop, &mut r) {
            return Ok((rct, attempt));
        }
    }
    Err(Error::domain(format!(
        "no trial rows selected in {MAX_SELECTION_ATTEMPTS} attempts"
    )))
}

/// Fused estimates from trial and observational summaries.
pub fn fuse_replicate(
    c: &EstimateSummary,
    o: &EstimateSummary,
    delta: f64,
    oracle: OracleKind,
    lambda1_grid: &[f64],
) -> Result<(f64, f64, Vec<f64>)> {
    let pool = naive_pool(c, o)?;
    let orac = match oracle {
        OracleKind::Dichotomous => oracle_estimate(c, o, delta.abs())?.estimate,
        OracleKind::BiasCorrectedPool => {
            let w = pooled_weight(c, o)?;
            (1.0 - w) * c.estimate + w * (o.estimate + delta)
        }
    };
    let n = c.n.min(o.n);
    let lambdas = lambda1_grid
        .iter()
        .map(|&l1| {
            let lambda = if n >= 2 { l1 * (n as f64).ln().sqrt() } else { 0.0 };
            let cfg = FusionConfig {
                lambda_override: Some(lambda),
                ..FusionConfig::default()
            };
            anchored_threshold(c, o, &cfg).map(|r| r.beta_lambda)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((pool.estimate, orac, lambdas))
}

/// One replicate with bias `delta` supplied by the caller (normally
/// [`true_bias_oracle`]).
pub fn run_replication(scenario: &Scenario, delta: f64, index: usize) -> Result<ReplicateResult> {
    let seed = scenario.replicate_seed(index);
    let mut rng = Rng::new(seed);
    let (rct, retries) = draw_rct(scenario, &mut rng, seed)?;
    let mut obs_rng = Rng::new(rng.next_u64());
    let obs = generate_obs(scenario.effect, scenario.n_obs, scenario.confounding_b, &mut obs_rng);
    let design = RctDesign::Constant(PI_C);
    let pair = scenario.estimator_pair;
    let opts = EstimatorOptions {
        stabilized: scenario.stabilized,
        ..EstimatorOptions::default()
    };

    let (c, o) = if pair.uses_split() {
        let rct = rct.project_covariates(&[0, 1]);
        let split = split_obs(&obs, rct.len(), &mut rng)?;
        let e = fit_participation(&rct, &split.o1)?;
        let c = match pair {
            EstimatorPair::Ippw => rct_ippw_with(&rct, &design, &e, &opts)?,
            _ => rct_aippw_with(&rct, &design, &e, &split.o1, &opts)?,
        };
        let o = match pair.obs_kind() {
            EstimatorKind::ObsIpw => obs_ipw_with(&split.o2, &opts)?,
            _ => obs_aipw_with(&split.o2, &opts)?,
        };
        (c, o)
    } else {
        match pair {
            EstimatorPair::Ipw => (
                rct_ipw_with(&rct, &design, &opts)?,
                obs_ipw_with(&obs, &opts)?,
            ),
            _ => (
                rct_aipw_with(&rct, &design, &opts)?,
                obs_aipw_with(&obs, &opts)?,
            ),
        }
    };
    let (beta_pool, beta_orac, beta_lambda) =
        fuse_replicate(&c, &o, delta, scenario.oracle, &scenario.lambda1_grid)?;
    Ok(ReplicateResult {
        index,
        seed,
        n_c: c.n,
        n_o: o.n,
        beta_c: c.estimate,
        se_c: c.standard_error,
        beta_o: o.estimate,
        se_o: o.standard_error,
        beta_pool,
        beta_orac,
        beta_lambda,
        selection_retries: retries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub estimator: String,
    pub mse: f64,
    pub mse_ratio_to_oracle: f64,
    pub mean_estimate: f64,
    pub replications_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario: Scenario,
    pub bias: BiasOracle,
    pub rows: Vec<SimRow>,
    pub failed_replications: usize,
    pub selection_retries: u64,
    pub seed_collisions: usize,
    pub mean_n_c: f64,
}

impl SimReport {
    pub fn row(&self, estimator: &str) -> Option<&SimRow> {
        self.rows.iter().find(|r| r.estimator == estimator)
    }

    pub fn ratio(&self, estimator: &str) -> Option<f64> {
        self.row(estimator).map(|r| r.mse_ratio_to_oracle)
    }
}

/// Row label of the thresholding estimator at `lambda1`.
pub fn lambda_label(lambda1: f64) -> String {
    format!("lambda1={lambda1}")
}

/// Runs all replicates (in parallel, collected in index order) and
/// aggregates MSEs against `β⋆ = 2`.
pub fn run_experiment(scenario: &Scenario) -> Result<SimReport> {
    scenario.validate()?;
    let bias = true_bias_oracle(
        scenario.effect,
        scenario.confounding_b,
        scenario.estimator_pair.obs_kind(),
        scenario.n_oracle,
        &mut Rng::new(scenario.oracle_seed()),
    )?;
    run_experiment_with_bias(scenario, bias)
}

/// [`run_experiment`] with a precomputed bias oracle.
pub fn run_experiment_with_bias(scenario: &Scenario, bias: BiasOracle) -> Result<SimReport> {
    scenario.validate()?;
    let outcomes: Vec<Result<ReplicateResult>> = (0..scenario.replications)
        .into_par_iter()
        .map(|i| run_replication(scenario, bias.delta, i))
        .collect();

    let total = outcomes.len();
    let mut results = Vec::with_capacity(total);
    let mut first_failure = None;
    for (i, r) in outcomes.into_iter().enumerate() {
        match r {
            Ok(r) => results.push(r),
            Err(e) => {
                log::warn!("replicate {i} failed: {e}");
                first_failure.get_or_insert_with(|| format!("replicate {i}: {e}"));
            }
        }
    }
    let failed = total - results.len();
    if failed as f64 > MAX_FAILURE_SHARE * total as f64 || results.is_empty() {
        return Err(Error::TooManyFailures {
            failed,
            total,
            first: first_failure.unwrap_or_default(),
        });
    }

    let seeds: HashSet<u64> = (0..total).map(|i| scenario.replicate_seed(i)).collect();
    let mut columns: Vec<(String, Vec<f64>)> = vec![
        ("rct".into(), results.iter().map(|r| r.beta_c).collect()),
        ("obs".into(), results.iter().map(|r| r.beta_o).collect()),
        ("oracle".into(), results.iter().map(|r| r.beta_orac).collect()),
        ("naive_pool".into(), results.iter().map(|r| r.beta_pool).collect()),
    ];
    for (k, &l1) in scenario.lambda1_grid.iter().enumerate() {
        columns.push((lambda_label(l1), results.iter().map(|r| r.beta_lambda[k]).collect()));
    }
    let mse = |v: &[f64]| v.iter().map(|b| (b - BETA_STAR).powi(2)).sum::<f64>() / v.len() as f64;
    let oracle_mse = mse(&columns[2].1);
    let rows = columns
        .iter()
        .map(|(name, v)| {
            let m = mse(v);
            SimRow {
                estimator: name.clone(),
                mse: m,
                mse_ratio_to_oracle: if name == "oracle" { 1.0 } else { m / oracle_mse },
                mean_estimate: v.iter().sum::<f64>() / v.len() as f64,
                replications_used: v.len(),
            }
        })
        .collect();
    Ok(SimReport {
        scenario: scenario.clone(),
        bias,
        rows,
        failed_replications: failed,
        selection_retries: results.iter().map(|r| r.selection_retries).sum(),
        seed_collisions: total - seeds.len(),
        mean_n_c: results.iter().map(|r| r.n_c as f64).sum::<f64>() / results.len() as f64,
    })
}

/// Scenarios of the published ratio table at one observational size: both
/// effect models, plain and augmented pairs, every `b`.
pub fn table1_scenarios(n_obs: usize, replications: usize, seed: u64) -> Vec<Scenario> {
    let mut out = Vec::new();
    for effect in [Effect::Constant, Effect::Heterogeneous] {
        for augmented in [false, true] {
            for &b in &B_GRID {
                let k = out.len() as u64;
                let pair = EstimatorPair::for_effect(effect, augmented);
                out.push(Scenario::new(effect, n_obs, b, pair, replications, derive_seed(seed, k)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(effect: Effect, pair: EstimatorPair, b: f64, reps: usize) -> Scenario {
        let mut s = Scenario::new(effect, 10_000, b, pair, reps, 11);
        s.n_oracle = 100_000;
        s.lambda1_grid = vec![0.0, 0.5, 0.6, 2.0];
        s
    }

    #[test]
    fn one_replicate_sanity() {
        for pair in [EstimatorPair::Ipw, EstimatorPair::Aipw] {
            let s = quick(Effect::Constant, pair, 0.0, 1);
            let r = run_replication(&s, 0.0, 0).unwrap();
            for v in [r.beta_c, r.beta_o, r.beta_pool, r.beta_orac] {
                assert!((0.0..=4.0).contains(&v), "{r:?}");
            }
            assert_eq!(r.beta_lambda[0], r.beta_c);
            let lo = r.beta_c.min(r.beta_pool) - 1e-12;
            let hi = r.beta_c.max(r.beta_pool) + 1e-12;
            let gaps: Vec<f64> = r.beta_lambda.iter().map(|b| (b - r.beta_pool).abs()).collect();
            for w in gaps.windows(2) {
                assert!(w[1] <= w[0] + 1e-15);
            }
            assert!(r.beta_lambda.iter().all(|b| (lo..=hi).contains(b)));
        }
    }

    #[test]
    fn split_pairs_run() {
        for pair in [EstimatorPair::Ippw, EstimatorPair::Aippw] {
            let s = quick(Effect::Heterogeneous, pair, 0.5, 1);
            let r = run_replication(&s, 0.0, 3).unwrap();
            assert_eq!(r.n_o, 10_000 - r.n_c);
            assert!((r.beta_c - 2.0).abs() < 2.0, "{r:?}");
        }
    }

    #[test]
    fn obs_copy_of_rct_lies_between() {
        // Fusing a trial with itself: β̂_λ stays in [β̂_c, β̂_o].
        let s = quick(Effect::Constant, EstimatorPair::Ipw, 0.0, 1);
        let r = run_replication(&s, 0.0, 1).unwrap();
        let c = EstimateSummary::from_standard_error(r.beta_c, r.se_c, r.n_c, "c").unwrap();
        let o = EstimateSummary::from_standard_error(r.beta_c + 0.1, r.se_c, r.n_c, "o").unwrap();
        let (_, _, ls) = fuse_replicate(&c, &o, 0.0, OracleKind::Dichotomous, &[0.5]).unwrap();
        assert!(ls[0] >= r.beta_c - 1e-12 && ls[0] <= r.beta_c + 0.1 + 1e-12);
    }

    #[test]
    fn experiment_is_deterministic() {
        let s = quick(Effect::Constant, EstimatorPair::Ipw, 0.1, 8);
        let a = run_experiment(&s).unwrap();
        let b = run_experiment(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ratio("oracle"), Some(1.0));
        assert_eq!(a.seed_collisions, 0);
        assert!(a.rows.iter().all(|r| r.mse.is_finite() && r.mse >= 0.0));
        assert_eq!(a.rows.len(), 8);
    }

    #[test]
    fn table1_grid() {
        let s = table1_scenarios(10_000, 5, 1);
        assert_eq!(s.len(), 36);
        assert_eq!(s[0].estimator_pair, EstimatorPair::Ipw);
        assert_eq!(s[35].estimator_pair, EstimatorPair::Aippw);
        assert_eq!(s[35].confounding_b, 10.0);
    }

    #[test]
    fn invalid_scenarios() {
        let mut s = quick(Effect::Constant, EstimatorPair::Ipw, 0.0, 1);
        s.replications = 0;
        assert!(run_experiment(&s).is_err());
        let mut s = quick(Effect::Constant, EstimatorPair::Ipw, -1.0, 1);
        s.replications = 1;
        assert!(s.validate().is_err());
    }
}
