use rayon::prelude::*;

use super::{Dataset, EstimateSummary};
use crate::error::{Error, Result};
use crate::math::{derive_seed, Rng};

/// Share of failed replicates above which the bootstrap is rejected.
const MAX_FAILURE_SHARE: f64 = 0.10;

/// Nonparametric bootstrap standard error: resample rows with replacement
/// `b` times, re-estimate, return the standard deviation (`n - 1`
/// denominator) of the successful replicates.
///
/// Replicate `k` draws from `derive_seed(base, k)` where `base` comes from
/// `rng`, so the result does not depend on the thread count.
pub fn bootstrap_se<F>(data: &Dataset, b: usize, rng: &mut Rng, estimator: F) -> Result<f64>
where
    F: Fn(&Dataset) -> Result<EstimateSummary> + Sync,
{
    if b < 2 {
        return Err(Error::domain(format!("bootstrap needs B >= 2, got {b}")));
    }
    let base = rng.next_u64();
    let n = data.len();
    let draws: Vec<Option<f64>> = (0..b)
        .into_par_iter()
        .map(|k| {
            let mut r = Rng::new(derive_seed(base, k as u64));
            let idx: Vec<usize> = (0..n).map(|_| r.index(n)).collect();
            estimator(&data.subset(&idx)).ok().map(|s| s.estimate)
        })
        .collect();
    let ok: Vec<f64> = draws.into_iter().flatten().collect();
    let failed = b - ok.len();
    if failed as f64 > MAX_FAILURE_SHARE * b as f64 || ok.len() < 2 {
        return Err(Error::Instability { failed, total: b });
    }
    if failed > 0 {
        log::warn!("bootstrap: {failed} of {b} replicates failed and were dropped");
    }
    let m = ok.iter().sum::<f64>() / ok.len() as f64;
    let var = ok.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (ok.len() - 1) as f64;
    Ok(var.sqrt())
}
