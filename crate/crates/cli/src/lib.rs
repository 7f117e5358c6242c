//! Command-line front end for `rctfuse`: configuration resolution, the
//! `fuse`, `estimate` and `simulate` commands, and run manifests.

pub mod commands;
pub mod config;

use std::io::Write;
use std::path::Path;

use serde::Serialize;

pub use commands::{cmd_estimate, cmd_fuse, cmd_simulate, Report};
pub use config::{Cli, Mode, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] rctfuse_core::Error),
}

impl CliError {
    /// 2 for usage and input problems, 1 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_input_error() => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub version: String,
    pub mode: Mode,
    pub seed: u64,
    pub config_hash: String,
    pub config: &'a RunConfig,
    pub failures: &'a serde_json::Value,
    pub outputs: Vec<&'a str>,
}

pub fn version_string(mode: Mode) -> String {
    let cmd = match mode {
        Mode::Fuse => "fuse",
        Mode::Estimate => "estimate",
        Mode::Simulate => "simulate",
    };
    format!("rctfuse {} {cmd}", env!("CARGO_PKG_VERSION"))
}

/// Resolves the config, runs the command on a pool of `threads` workers and
/// writes its outputs (to the output directory, or `stdout`).
pub fn run(cli: &Cli, env_seed: Option<&str>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = RunConfig::resolve(cli, env_seed)?;
    let mode = config
        .mode
        .ok_or_else(|| CliError::Usage("--mode is required (fuse, estimate or simulate)".into()))?;
    if config.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    let report = pool.install(|| match mode {
        Mode::Fuse => cmd_fuse(&config),
        Mode::Estimate => cmd_estimate(&config),
        Mode::Simulate => cmd_simulate(&config),
    })?;

    match &config.output {
        Some(dir) => write_outputs(dir, mode, &config, &report),
        None => {
            stdout.write_all(report.stdout.as_bytes())?;
            Ok(())
        }
    }
}

fn write_outputs(dir: &Path, mode: Mode, config: &RunConfig, report: &Report) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    for (name, content) in &report.files {
        rctfuse_core::io::write_text(dir.join(name), content)?;
        log::info!("wrote {}", dir.join(name).display());
    }
    let manifest = Manifest {
        version: version_string(mode),
        mode,
        seed: config.seed(),
        config_hash: config.hash(),
        config,
        failures: &report.failures,
        outputs: report.files.iter().map(|(n, _)| n.as_str()).collect(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(rctfuse_core::Error::from)?;
    rctfuse_core::io::write_text(dir.join("manifest.json"), &json)?;
    Ok(())
}
