use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use rctfuse_core::estimators::{
    fit_participation, obs_aipw_sandwich, obs_aipw_with, obs_ipw_with, rct_aipw_with,
    rct_aippw_with, rct_ipw_with, rct_ippw_with, split_obs, EstimatorOptions,
};
use rctfuse_core::fusion::{anchored_threshold, oracle_ci, oracle_estimate, rct_ci};
use rctfuse_core::io::{
    bundled_summary, fmt_num, fusion_csv, parse_micro_csv_with, parse_summary_csv, phase_csv,
    sim_report_csv, table1_csv, FusionRow,
};
use rctfuse_core::math::derive_seed;
use rctfuse_core::simulation::{
    phase_sweep, run_experiment, table1_scenarios, verify_coverage, Effect, EstimatorPair,
    Model1Params, Scenario, SimReport, B_GRID, N_OBS_GRID,
};
use rctfuse_core::{Dataset, EstimateSummary, FusionConfig, RctDesign, Rng, Source};

use crate::config::{EffectArg, EstimatorArg, Preset, RunConfig};
use crate::CliError;

/// Files to write (name, content), what to print without an output
/// directory, and failure counts for the manifest.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub files: Vec<(String, String)>,
    pub stdout: String,
    pub failures: serde_json::Value,
}

/// Attaches the path to file-system errors.
fn with_path<T>(path: &Path, r: rctfuse_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| match e {
        rctfuse_core::Error::Io(io) => CliError::Usage(format!("{}: {io}", path.display())),
        rctfuse_core::Error::Parse { line, message } => {
            CliError::Usage(format!("{}: line {line}: {message}", path.display()))
        }
        other => CliError::Core(other),
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Core(e.into()))
}

fn fusion_config(config: &RunConfig) -> FusionConfig {
    let d = FusionConfig::default();
    FusionConfig {
        lambda1: config.lambda1.unwrap_or(d.lambda1),
        lambda_override: config.lambda,
        alpha: config.alpha.unwrap_or(d.alpha),
        delta_bar: config.delta_bar,
    }
}

fn fuse_row(
    study: &str,
    c: &EstimateSummary,
    o: &EstimateSummary,
    fc: &FusionConfig,
) -> Result<FusionRow, CliError> {
    let result = anchored_threshold(c, o, fc)?;
    let (oracle_estimate, oracle_ci) = match fc.delta_bar {
        Some(d) => (
            Some(oracle_estimate(c, o, d)?.estimate),
            Some(oracle_ci(c, o, d, fc.alpha)?),
        ),
        None => (None, None),
    };
    Ok(FusionRow {
        study: study.to_string(),
        beta_c: c.estimate,
        beta_o: o.estimate,
        result,
        rct_ci: rct_ci(c, fc.alpha)?,
        oracle_estimate,
        oracle_ci,
    })
}

/// Fuses every study of a summary CSV (the bundled table when no input is
/// given).
pub fn cmd_fuse(config: &RunConfig) -> Result<Report, CliError> {
    let records = match &config.input {
        Some(p) => with_path(p, parse_summary_csv(p))?,
        None => {
            log::info!("no --input given; using the bundled summary table");
            bundled_summary()
        }
    };
    let fc = fusion_config(config);
    fc.validate()?;
    let rows = records
        .iter()
        .map(|r| {
            let (c, o) = r.summaries()?;
            fuse_row(&r.study, &c, &o, &fc)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let csv = fusion_csv(&rows);
    Ok(Report {
        files: vec![
            ("fusion.csv".into(), csv.clone()),
            ("fusion.json".into(), to_json(&rows)?),
        ],
        stdout: csv,
        failures: json!({}),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub name: String,
    #[serde(flatten)]
    pub summary: EstimateSummary,
}

#[derive(Debug, Clone, Serialize)]
struct EstimateOutput<'a> {
    stabilized: bool,
    split_seed: Option<u64>,
    estimates: &'a [EstimateRow],
    fusion: Option<&'a FusionRow>,
}

fn estimates_csv(rows: &[EstimateRow]) -> String {
    let mut out = String::from("estimator,estimate,standard_error,n,sigma_hat\n");
    for r in rows {
        let s = &r.summary;
        writeln!(
            out,
            "{},{},{},{},{}",
            r.name,
            fmt_num(s.estimate),
            fmt_num(s.standard_error),
            s.n,
            fmt_num(s.sigma_hat)
        )
        .unwrap();
    }
    out
}

fn rct_design(config: &RunConfig, rct_path: &Path) -> Result<(Dataset, RctDesign), CliError> {
    match (config.pi_c, config.pi_column.as_deref()) {
        (Some(_), Some(_)) => Err(CliError::Usage("give either --pi-c or --pi-column, not both".into())),
        (None, None) => Err(CliError::Usage(
            "trial input needs its assignment probability: --pi-c <p> or --pi-column <name>".into(),
        )),
        (Some(p), None) => {
            let (data, _) = with_path(rct_path, parse_micro_csv_with(rct_path, Source::Rct, None))?;
            Ok((data, RctDesign::Constant(p)))
        }
        (None, Some(col)) => {
            let (data, probs) = with_path(rct_path, parse_micro_csv_with(rct_path, Source::Rct, Some(col)))?;
            let probs = probs.expect("probability column requested");
            Ok((data, RctDesign::PerRow(probs)))
        }
    }
}

/// Every estimator applicable to the given micro data, optionally followed
/// by a fusion of the augmented trial and observational estimates.
pub fn cmd_estimate(config: &RunConfig) -> Result<Report, CliError> {
    let rct_path = config
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("estimate needs --input <trial micro CSV>".into()))?;
    let (rct, design) = rct_design(config, rct_path)?;
    design.validate(rct.len())?;
    let obs = match &config.obs_input {
        Some(p) => Some(with_path(p, parse_micro_csv_with(p, Source::Obs, None))?.0),
        None => None,
    };
    if config.ippw && obs.is_none() {
        return Err(CliError::Usage("--ippw needs --obs-input".into()));
    }
    if config.fuse && obs.is_none() {
        return Err(CliError::Usage("--fuse needs --obs-input".into()));
    }
    let opts = EstimatorOptions {
        stabilized: config.stabilized,
        ..EstimatorOptions::default()
    };
    let row = |name: &str, summary: EstimateSummary| EstimateRow {
        name: name.to_string(),
        summary,
    };

    let mut rows = vec![
        row("rct_ipw", rct_ipw_with(&rct, &design, &opts)?),
        row("rct_aipw", rct_aipw_with(&rct, &design, &opts)?),
    ];
    let mut split_seed = None;
    let mut fusion_pair = None;
    if let Some(obs) = &obs {
        rows.push(row("obs_ipw", obs_ipw_with(obs, &opts)?));
        rows.push(row("obs_aipw", obs_aipw_with(obs, &opts)?));
        rows.push(row("obs_aipw_sandwich", obs_aipw_sandwich(obs)?));
        fusion_pair = Some((rows[1].summary.clone(), rows[3].summary.clone()));

        if config.ippw {
            if rct.n_covariates() != obs.n_covariates() {
                return Err(CliError::Usage(format!(
                    "--ippw needs the same covariates in both files (trial {}, observational {})",
                    rct.n_covariates(),
                    obs.n_covariates()
                )));
            }
            let seed = derive_seed(config.seed(), 0);
            log::info!("splitting observational data with seed {seed}");
            split_seed = Some(seed);
            let split = split_obs(obs, rct.len(), &mut Rng::new(seed))?;
            let participation = fit_participation(&rct, &split.o1)?;
            rows.push(row("rct_ippw", rct_ippw_with(&rct, &design, &participation, &opts)?));
            let aippw = rct_aippw_with(&rct, &design, &participation, &split.o1, &opts)?;
            rows.push(row("rct_aippw", aippw.clone()));
            rows.push(row("obs_ipw_o2", obs_ipw_with(&split.o2, &opts)?));
            let o2 = obs_aipw_with(&split.o2, &opts)?;
            rows.push(row("obs_aipw_o2", o2.clone()));
            fusion_pair = Some((aippw, o2));
        }
    }

    let fusion = match (config.fuse, fusion_pair) {
        (true, Some((c, o))) => {
            let fc = fusion_config(config);
            fc.validate()?;
            Some(fuse_row(&format!("{}+{}", c.label, o.label), &c, &o, &fc)?)
        }
        _ => None,
    };

    let csv = estimates_csv(&rows);
    let mut files = vec![("estimates.csv".to_string(), csv.clone())];
    let mut stdout = csv;
    if let Some(f) = &fusion {
        let fcsv = fusion_csv(std::slice::from_ref(f));
        files.push(("fusion.csv".into(), fcsv.clone()));
        stdout.push('\n');
        stdout.push_str(&fcsv);
    }
    let out = EstimateOutput {
        stabilized: config.stabilized,
        split_seed,
        estimates: &rows,
        fusion: fusion.as_ref(),
    };
    files.push(("estimates.json".into(), to_json(&out)?));
    Ok(Report {
        files,
        stdout,
        failures: json!({}),
    })
}

fn effect_of(e: EffectArg) -> Effect {
    match e {
        EffectArg::Constant => Effect::Constant,
        EffectArg::Heterogeneous => Effect::Heterogeneous,
    }
}

fn pair_of(e: EstimatorArg) -> EstimatorPair {
    match e {
        EstimatorArg::Ipw => EstimatorPair::Ipw,
        EstimatorArg::Aipw => EstimatorPair::Aipw,
        EstimatorArg::Ippw => EstimatorPair::Ippw,
        EstimatorArg::Aippw => EstimatorPair::Aippw,
    }
}

fn reps(config: &RunConfig, default: usize) -> Result<usize, CliError> {
    match config.reps.unwrap_or(default) {
        0 => Err(CliError::Usage("--reps must be at least 1".into())),
        r => Ok(r),
    }
}

fn b_values(config: &RunConfig) -> Result<Vec<f64>, CliError> {
    let bs = config.b.clone().unwrap_or_else(|| B_GRID.to_vec());
    if bs.is_empty() || bs.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
        return Err(CliError::Usage(format!(
            "--b values must be nonnegative reals (published grid: {B_GRID:?})"
        )));
    }
    Ok(bs)
}

/// Gaussian-model defaults for the phase and coverage presets.
fn model1_defaults() -> Model1Params {
    Model1Params::simple(500, 5000, 2.0, 0.0)
}

/// Phase grid in multiples of the trial standard error.
pub const PHASE_GRID: [f64; 10] = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0];

/// Runs a Monte Carlo preset, or a grid over `--b` for one effect and
/// estimator pair.
pub fn cmd_simulate(config: &RunConfig) -> Result<Report, CliError> {
    let seed = config.seed();
    match config.preset {
        Some(Preset::PhaseSweep) => {
            let base = model1_defaults();
            let se_c = base.se_c();
            let grid: Vec<f64> = PHASE_GRID.iter().map(|k| k * se_c).collect();
            let rows = phase_sweep(&base, &grid, config.lambda1.unwrap_or(0.5), reps(config, 2000)?, seed)?;
            let csv = phase_csv(&rows);
            Ok(Report {
                files: vec![("phase_sweep.csv".into(), csv.clone())],
                stdout: csv,
                failures: json!({}),
            })
        }
        Some(Preset::Coverage) => {
            let base = model1_defaults();
            let se_c = base.se_c();
            let params = Model1Params {
                delta: 0.5 * se_c,
                ..base
            };
            let delta_bar = config.delta_bar.unwrap_or(0.9 * se_c);
            let alpha = config.alpha.unwrap_or(0.05);
            let report = verify_coverage(&params, delta_bar, alpha, reps(config, 2000)?, seed)?;
            let js = to_json(&report)?;
            Ok(Report {
                files: vec![("coverage.json".into(), js.clone())],
                stdout: js + "\n",
                failures: json!({}),
            })
        }
        preset => {
            let n_obs = config.n_obs.unwrap_or(N_OBS_GRID[0]);
            if !N_OBS_GRID.contains(&n_obs) {
                return Err(CliError::Usage(format!(
                    "--n-obs must be one of {N_OBS_GRID:?}, got {n_obs}"
                )));
            }
            let reps = reps(config, 1000)?;
            let bs = b_values(config)?;
            let mut scenarios: Vec<Scenario> = if preset == Some(Preset::Table1) {
                table1_scenarios(n_obs, reps, seed)
                    .into_iter()
                    .filter(|s| bs.contains(&s.confounding_b))
                    .filter(|s| config.effect.map_or(true, |e| effect_of(e) == s.effect))
                    .filter(|s| config.estimator.map_or(true, |e| pair_of(e) == s.estimator_pair))
                    .collect()
            } else {
                let effect = effect_of(config.effect.unwrap_or(EffectArg::Constant));
                let pair = pair_of(config.estimator.unwrap_or(EstimatorArg::Ipw));
                bs.iter()
                    .enumerate()
                    .map(|(k, &b)| Scenario::new(effect, n_obs, b, pair, reps, derive_seed(seed, k as u64)))
                    .collect()
            };
            if scenarios.is_empty() {
                return Err(CliError::Usage(
                    "no table1 scenario matches the --b/--effect/--estimator filters".into(),
                ));
            }
            for s in &mut scenarios {
                if let Some(l) = config.lambda1 {
                    s.lambda1_grid = vec![l];
                }
                if let Some(n) = config.n_oracle {
                    s.n_oracle = n;
                }
                s.stabilized = config.stabilized;
            }
            let mut reports: Vec<SimReport> = Vec::with_capacity(scenarios.len());
            for s in &scenarios {
                log::info!(
                    "simulating {} / {} / b = {} ({} replicates)",
                    s.effect.name(),
                    s.estimator_pair.name(),
                    s.confounding_b,
                    s.replications
                );
                reports.push(run_experiment(s)?);
            }
            let failures = reports
                .iter()
                .map(|r| {
                    json!({
                        "effect": r.scenario.effect.name(),
                        "pair": r.scenario.estimator_pair.name(),
                        "b": r.scenario.confounding_b,
                        "failed_replications": r.failed_replications,
                        "selection_retries": r.selection_retries,
                        "seed_collisions": r.seed_collisions,
                    })
                })
                .collect::<Vec<_>>();
            let csv = sim_report_csv(&reports);
            Ok(Report {
                files: vec![
                    ("sim_report.csv".into(), csv.clone()),
                    ("table1.csv".into(), table1_csv(&reports)),
                ],
                stdout: csv,
                failures: json!(failures),
            })
        }
    }
}
