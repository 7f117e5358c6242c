use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::fusion::{FusionResult, IntervalResult};
use crate::simulation::{lambda_label, PhaseRow, SimReport};

use super::fmt_num;

/// Writes `content`, appending a newline if it lacks one.
pub fn write_text(path: impl AsRef<Path>, content: &str) -> Result<()> {
    let mut s = content.to_string();
    if !s.ends_with('\n') {
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// One study's fusion output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionRow {
    pub study: String,
    pub beta_c: f64,
    pub beta_o: f64,
    pub result: FusionResult,
    pub rct_ci: IntervalResult,
    pub oracle_estimate: Option<f64>,
    pub oracle_ci: Option<IntervalResult>,
}

pub fn fusion_csv(rows: &[FusionRow]) -> String {
    let mut out = String::from(
        "study,beta_c,beta_o,omega_hat,tilde_delta,threshold,delta_hat,beta_lambda,thresholded_to_zero,lambda_used,beta_pool,se_pool,rct_ci_lower,rct_ci_upper,oracle_estimate,oracle_ci_lower,oracle_ci_upper,oracle_ci_method\n",
    );
    for r in rows {
        let f = &r.result;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            field(&r.study),
            fmt_num(r.beta_c),
            fmt_num(r.beta_o),
            fmt_num(f.omega_hat),
            fmt_num(f.tilde_delta),
            fmt_num(f.threshold),
            fmt_num(f.delta_hat),
            fmt_num(f.beta_lambda),
            f.thresholded_to_zero,
            fmt_num(f.lambda_used),
            fmt_num(f.beta_pool),
            fmt_num(f.se_pool),
            fmt_num(r.rct_ci.lower),
            fmt_num(r.rct_ci.upper),
            opt(r.oracle_estimate),
            opt(r.oracle_ci.map(|c| c.lower)),
            opt(r.oracle_ci.map(|c| c.upper)),
            r.oracle_ci
                .map(|c| match c.method {
                    crate::fusion::IntervalMethod::RctOnly => "RCT_ONLY",
                    crate::fusion::IntervalMethod::Oracle => "ORACLE",
                })
                .unwrap_or_default(),
        )
        .unwrap();
    }
    out
}

/// Long format: one row per scenario and estimator.
pub fn sim_report_csv(reports: &[SimReport]) -> String {
    let mut out = String::from(
        "effect,n_obs,b,pair,stabilized,estimator,mse,mse_ratio_to_oracle,mean_estimate,replications_used,delta_true\n",
    );
    for rep in reports {
        let s = &rep.scenario;
        for row in &rep.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                s.effect.name(),
                s.n_obs,
                fmt_num(s.confounding_b),
                s.estimator_pair.name(),
                s.stabilized,
                field(&row.estimator),
                fmt_num(row.mse),
                fmt_num(row.mse_ratio_to_oracle),
                fmt_num(row.mean_estimate),
                row.replications_used,
                fmt_num(rep.bias.delta),
            )
            .unwrap();
        }
    }
    out
}

/// Wide ratio table: one row per (effect, pair, b) with the trial,
/// observational and thresholding ratios.
pub fn table1_csv(reports: &[SimReport]) -> String {
    let lambdas: Vec<f64> = reports
        .first()
        .map(|r| r.scenario.lambda1_grid.clone())
        .unwrap_or_default();
    let mut out = String::from("effect,pair,n_obs,b,ratio_rct,ratio_obs");
    for l in &lambdas {
        write!(out, ",ratio_{}", field(&lambda_label(*l))).unwrap();
    }
    out.push('\n');
    for rep in reports {
        let s = &rep.scenario;
        write!(
            out,
            "{},{},{},{},{},{}",
            s.effect.name(),
            s.estimator_pair.name(),
            s.n_obs,
            fmt_num(s.confounding_b),
            opt(rep.ratio("rct")),
            opt(rep.ratio("obs")),
        )
        .unwrap();
        for l in &lambdas {
            write!(out, ",{}", opt(rep.ratio(&lambda_label(*l)))).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn phase_csv(rows: &[PhaseRow]) -> String {
    let mut out = String::from("delta,estimator,mse\n");
    for r in rows {
        writeln!(out, "{},{},{}", fmt_num(r.delta), field(&r.estimator), fmt_num(r.mse)).unwrap();
    }
    out
}
