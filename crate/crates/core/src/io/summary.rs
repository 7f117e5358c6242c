use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimateSummary;

/// Published trial and emulation summaries, one row per study.
pub const BUNDLED_SUMMARY_CSV: &str = include_str!("../../data/rct_duplicate.csv");

const HEADER: [&str; 7] = ["study", "beta_c", "se_c", "n_c", "beta_o", "se_o", "n_o"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub study: String,
    pub beta_c: f64,
    pub se_c: f64,
    pub n_c: usize,
    pub beta_o: f64,
    pub se_o: f64,
    pub n_o: usize,
}

impl SummaryRecord {
    /// Trial and observational summaries; `σ̂` is reconstructed as `se·√n`.
    pub fn summaries(&self) -> Result<(EstimateSummary, EstimateSummary)> {
        Ok((
            EstimateSummary::from_standard_error(self.beta_c, self.se_c, self.n_c, format!("{}:rct", self.study))?,
            EstimateSummary::from_standard_error(self.beta_o, self.se_o, self.n_o, format!("{}:obs", self.study))?,
        ))
    }
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn real(field: &str, name: &str, line: u64) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("{name}: '{field}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{name}: '{field}' is not finite")));
    }
    Ok(v)
}

fn count(field: &str, name: &str, line: u64) -> Result<usize> {
    let n: usize = field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("{name}: '{field}' is not a nonnegative integer")))?;
    if n < 2 {
        return Err(parse_err(line, format!("{name} must be at least 2, got {n}")));
    }
    Ok(n)
}

/// Strict parse of `study,beta_c,se_c,n_c,beta_o,se_o,n_o`.
pub fn parse_summary_str(text: &str) -> Result<Vec<SummaryRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != HEADER {
        return Err(parse_err(
            1,
            format!("header must be '{}', got '{}'", HEADER.join(","), names.join(",")),
        ));
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != HEADER.len() {
            return Err(parse_err(line, format!("expected {} fields, got {}", HEADER.len(), rec.len())));
        }
        let study = rec[0].trim().to_string();
        let r = SummaryRecord {
            beta_c: real(&rec[1], "beta_c", line)?,
            se_c: real(&rec[2], "se_c", line)?,
            n_c: count(&rec[3], "n_c", line)?,
            beta_o: real(&rec[4], "beta_o", line)?,
            se_o: real(&rec[5], "se_o", line)?,
            n_o: count(&rec[6], "n_o", line)?,
            study,
        };
        for (name, se) in [("se_c", r.se_c), ("se_o", r.se_o)] {
            if se <= 0.0 {
                return Err(parse_err(line, format!("study '{}': {name} must be positive, got {se}", r.study)));
            }
        }
        out.push(r);
    }
    Ok(out)
}

pub fn parse_summary_csv(path: impl AsRef<std::path::Path>) -> Result<Vec<SummaryRecord>> {
    parse_summary_str(&std::fs::read_to_string(path)?)
}

pub fn bundled_summary() -> Vec<SummaryRecord> {
    parse_summary_str(BUNDLED_SUMMARY_CSV).expect("bundled summary file is valid")
}
