use serde::{Deserialize, Serialize};

use super::linalg::{cholesky_solve, dot, Matrix};
use crate::error::{Error, Result};

/// Relative log-likelihood change treated as rounding in the step search.
const LL_SLACK: f64 = 1e-13;

/// Numerically stable logistic function `1 / (1 + e^{-x})`.
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    pub max_iterations: usize,
    /// Convergence when the largest per-observation-averaged score entry
    /// `|Xᵀ(y - p)| / n` falls below this.
    pub tolerance: f64,
    /// Coefficient norm treated as evidence of separation.
    pub separation_norm: f64,
    /// Jitter added to the diagonal of `XᵀWX`.
    pub ridge: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-12,
            separation_norm: 30.0,
            ridge: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    /// First entry is the intercept when the design carries one.
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Log-likelihood after each accepted step, starting with the initial point.
    pub log_likelihood: Vec<f64>,
}

impl LogisticFit {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        expit(dot(row, &self.coefficients))
    }

    pub fn predict(&self, design: &Matrix) -> Vec<f64> {
        (0..design.nrows())
            .map(|i| self.predict_row(design.row(i)))
            .collect()
    }
}

fn log_likelihood(eta: &[f64], labels: &[f64]) -> f64 {
    eta.iter()
        .zip(labels)
        .map(|(&e, &y)| y * e - log1p_exp(e))
        .sum()
}

pub fn logistic_fit(design: &Matrix, labels: &[f64]) -> Result<LogisticFit> {
    logistic_fit_with(design, labels, LogisticOptions::default())
}

/// Maximum likelihood logistic regression by iteratively reweighted least
/// squares (Newton–Raphson with step halving).
pub fn logistic_fit_with(
    design: &Matrix,
    labels: &[f64],
    opts: LogisticOptions,
) -> Result<LogisticFit> {
    let (n, p) = (design.nrows(), design.ncols());
    if labels.len() != n {
        return Err(Error::domain(format!(
            "labels have {} entries, design has {n} rows",
            labels.len()
        )));
    }
    if n < p {
        return Err(Error::domain(format!(
            "logistic regression needs at least as many rows ({n}) as columns ({p})"
        )));
    }
    if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::domain("labels must be 0 or 1"));
    }
    let positives = labels.iter().filter(|&&y| y == 1.0).count();
    if positives == 0 || positives == n {
        return Err(Error::SingleClass);
    }
    // The rank check is independent of the weights.
    cholesky_solve(&design.weighted_gram(None), &vec![0.0; p])?;

    let mut beta = vec![0.0; p];
    let mut eta = design.mul_vec(&beta);
    let mut ll = log_likelihood(&eta, labels);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        let prob: Vec<f64> = eta.iter().map(|&e| expit(e)).collect();
        let resid: Vec<f64> = labels.iter().zip(&prob).map(|(y, q)| y - q).collect();
        let score = design.transpose_mul(&resid);
        let max_score = score.iter().fold(0.0f64, |m, s| m.max(s.abs())) / n as f64;
        if max_score <= opts.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let w: Vec<f64> = prob.iter().map(|q| q * (1.0 - q)).collect();
        let mut h = design.weighted_gram(Some(&w));
        for j in 0..p {
            h[j * p + j] += opts.ridge;
        }
        let step = cholesky_solve(&h, &score)?;

        let mut t = 1.0;
        loop {
            let candidate: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let cand_eta = design.mul_vec(&candidate);
            let cand_ll = log_likelihood(&cand_eta, labels);
            let accept = cand_ll >= ll - LL_SLACK * (1.0 + ll.abs());
            if accept || t < 1e-6 {
                if accept {
                    beta = candidate;
                    eta = cand_eta;
                    ll = cand_ll;
                    trace.push(ll);
                }
                break;
            }
            t *= 0.5;
        }
        if t < 1e-6 {
            // No ascent direction left at working precision.
            converged = true;
            break;
        }

        let norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        if norm > opts.separation_norm {
            return Err(Error::Separation {
                norm,
                cap: opts.separation_norm,
            });
        }
    }

    Ok(LogisticFit {
        coefficients: beta,
        converged,
        iterations,
        log_likelihood: trace,
    })
}
