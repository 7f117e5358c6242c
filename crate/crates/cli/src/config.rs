use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Seed used when neither a flag, a config file nor `RCTFUSE_SEED` sets one.
pub const DEFAULT_SEED: u64 = 20_240_101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Fuse,
    Estimate,
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EffectArg {
    Constant,
    Heterogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorArg {
    Ipw,
    Aipw,
    Ippw,
    Aippw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Table1,
    PhaseSweep,
    Coverage,
}

/// Fuse trial and observational evidence on an average treatment effect.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "rctfuse", version)]
pub struct Cli {
    /// Command to run.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Summary CSV (fuse) or trial micro CSV (estimate).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Observational micro CSV (estimate).
    #[arg(long)]
    pub obs_input: Option<PathBuf>,
    /// Output directory; reports go to stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Fixed threshold multiplier, overriding lambda1.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Known bound on the observational bias; enables oracle outputs.
    #[arg(long)]
    pub delta_bar: Option<f64>,
    /// Constant trial assignment probability.
    #[arg(long)]
    pub pi_c: Option<f64>,
    /// Column of the trial CSV holding per-row assignment probabilities.
    #[arg(long)]
    pub pi_column: Option<String>,
    /// Add participation-weighted trial estimators (splits the observational data).
    #[arg(long)]
    pub ippw: bool,
    /// Use weight-normalized estimators.
    #[arg(long)]
    pub stabilized: bool,
    /// Append fusion of trial and observational estimates.
    #[arg(long)]
    pub fuse: bool,
    /// Random seed; falls back to RCTFUSE_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub n_obs: Option<usize>,
    #[arg(long, value_enum)]
    pub effect: Option<EffectArg>,
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Confounding strengths to simulate (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub b: Option<Vec<f64>>,
    /// Rows used by the bias oracle in simulations.
    #[arg(long)]
    pub n_oracle: Option<usize>,
    /// Flat JSON config (or a run manifest); flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Resolved settings; also the `config` block of a run manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none", alias = "obs_input")]
    pub obs_input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", alias = "delta_bar")]
    pub delta_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", alias = "pi_c")]
    pub pi_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", alias = "pi_column")]
    pub pi_column: Option<String>,
    #[serde(default)]
    pub ippw: bool,
    #[serde(default)]
    pub stabilized: bool,
    #[serde(default)]
    pub fuse: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Not part of the manifest: outputs do not depend on it.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", alias = "n_obs")]
    pub n_obs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effect: Option<EffectArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorArg>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", alias = "n_oracle")]
    pub n_oracle: Option<usize>,
}

#[derive(Deserialize)]
struct ManifestConfig {
    config: RunConfig,
}

/// Reads a flat config, or the `config` block of a manifest.
pub fn load_config_file(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
    let parsed = if value.get("config").is_some() {
        serde_json::from_value::<ManifestConfig>(value).map(|m| m.config)
    } else {
        serde_json::from_value::<RunConfig>(value)
    };
    parsed.map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

impl RunConfig {
    /// Flags over config file over `RCTFUSE_SEED`.
    pub fn resolve(cli: &Cli, env_seed: Option<&str>) -> Result<Self, CliError> {
        let file = match &cli.config {
            Some(p) => load_config_file(p)?,
            None => RunConfig::default(),
        };
        let env_seed = match env_seed {
            Some(s) => Some(s.trim().parse::<u64>().map_err(|_| {
                CliError::Usage(format!("RCTFUSE_SEED must be an unsigned integer, got '{s}'"))
            })?),
            None => None,
        };
        Ok(RunConfig {
            mode: cli.mode.or(file.mode),
            input: cli.input.clone().or(file.input),
            obs_input: cli.obs_input.clone().or(file.obs_input),
            output: cli.output.clone().or(file.output),
            lambda1: cli.lambda1.or(file.lambda1),
            lambda: cli.lambda.or(file.lambda),
            alpha: cli.alpha.or(file.alpha),
            delta_bar: cli.delta_bar.or(file.delta_bar),
            pi_c: cli.pi_c.or(file.pi_c),
            pi_column: cli.pi_column.clone().or(file.pi_column),
            ippw: cli.ippw || file.ippw,
            stabilized: cli.stabilized || file.stabilized,
            fuse: cli.fuse || file.fuse,
            seed: cli.seed.or(file.seed).or(env_seed).or(Some(DEFAULT_SEED)),
            threads: cli.threads.or(file.threads),
            reps: cli.reps.or(file.reps),
            n_obs: cli.n_obs.or(file.n_obs),
            effect: cli.effect.or(file.effect),
            estimator: cli.estimator.or(file.estimator),
            preset: cli.preset.or(file.preset),
            b: cli.b.clone().or(file.b),
            n_oracle: cli.n_oracle.or(file.n_oracle),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
