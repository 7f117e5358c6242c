use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Matrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Rct,
    Obs,
}

/// Row-level study data. Covariates carry no intercept column; estimators
/// add one internally.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    outcome: Vec<f64>,
    treatment: Vec<u8>,
    covariates: Matrix,
    source: Source,
}

impl Dataset {
    pub fn new(
        outcome: Vec<f64>,
        treatment: Vec<u8>,
        covariates: Matrix,
        source: Source,
    ) -> Result<Self> {
        let n = outcome.len();
        if n == 0 {
            return Err(Error::domain("dataset must have at least one row"));
        }
        if treatment.len() != n || covariates.nrows() != n {
            return Err(Error::domain(format!(
                "length mismatch: {n} outcomes, {} treatments, {} covariate rows",
                treatment.len(),
                covariates.nrows()
            )));
        }
        if let Some(i) = treatment.iter().position(|&a| a > 1) {
            return Err(Error::domain(format!(
                "treatment at row {i} is {}, expected 0 or 1",
                treatment[i]
            )));
        }
        if let Some(i) = outcome.iter().position(|y| !y.is_finite()) {
            return Err(Error::domain(format!("outcome at row {i} is not finite")));
        }
        if covariates.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("covariates contain non-finite values"));
        }
        Ok(Self {
            outcome,
            treatment,
            covariates,
            source,
        })
    }

    /// Dataset with no covariates.
    pub fn without_covariates(outcome: Vec<f64>, treatment: Vec<u8>, source: Source) -> Result<Self> {
        let n = outcome.len();
        Self::new(outcome, treatment, Matrix::zeros(n, 0), source)
    }

    pub fn len(&self) -> usize {
        self.outcome.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcome.is_empty()
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn treatment(&self) -> &[u8] {
        &self.treatment
    }

    pub fn covariates(&self) -> &Matrix {
        &self.covariates
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn n_treated(&self) -> usize {
        self.treatment.iter().filter(|&&a| a == 1).count()
    }

    /// Rows at `idx`, in that order. May be empty (used for data splits).
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            outcome: idx.iter().map(|&i| self.outcome[i]).collect(),
            treatment: idx.iter().map(|&i| self.treatment[i]).collect(),
            covariates: self.covariates.select_rows(idx),
            source: self.source,
        }
    }

    /// Keeps only the listed covariate columns.
    pub fn project_covariates(&self, cols: &[usize]) -> Self {
        Self {
            covariates: self.covariates.select_columns(cols),
            ..self.clone()
        }
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = source;
        self
    }

    /// Same rows with every outcome mapped through `f`.
    pub fn map_outcome(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            outcome: self.outcome.iter().map(|&y| f(y)).collect(),
            ..self.clone()
        }
    }

    /// Same rows with treatment labels swapped.
    pub fn flip_treatment(&self) -> Self {
        Self {
            treatment: self.treatment.iter().map(|&a| 1 - a).collect(),
            ..self.clone()
        }
    }

    /// Row indices of the given arm.
    pub(crate) fn arm_indices(&self, arm: u8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.treatment[i] == arm).collect()
    }
}

/// Known treatment-assignment probability of the trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RctDesign {
    Constant(f64),
    PerRow(Vec<f64>),
}

impl RctDesign {
    pub fn validate(&self, n: usize) -> Result<()> {
        let ok = |p: f64| p > 0.0 && p < 1.0;
        match self {
            RctDesign::Constant(p) if !ok(*p) => Err(Error::domain(format!(
                "assignment probability must be in (0, 1), got {p}"
            ))),
            RctDesign::PerRow(ps) if ps.len() != n => Err(Error::domain(format!(
                "{} assignment probabilities for {n} rows",
                ps.len()
            ))),
            RctDesign::PerRow(ps) => match ps.iter().position(|&p| !ok(p)) {
                Some(i) => Err(Error::domain(format!(
                    "assignment probability at row {i} is {}, expected (0, 1)",
                    ps[i]
                ))),
                None => Ok(()),
            },
            RctDesign::Constant(_) => Ok(()),
        }
    }

    pub fn probability(&self, i: usize) -> f64 {
        match self {
            RctDesign::Constant(p) => *p,
            RctDesign::PerRow(ps) => ps[i],
        }
    }

    pub fn probabilities(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.probability(i)).collect()
    }

    /// `π ↦ 1 - π`, matching [`Dataset::flip_treatment`].
    pub fn complement(&self) -> Self {
        match self {
            RctDesign::Constant(p) => RctDesign::Constant(1.0 - p),
            RctDesign::PerRow(ps) => RctDesign::PerRow(ps.iter().map(|p| 1.0 - p).collect()),
        }
    }
}

/// Observational data split into a participation-modeling half and an
/// estimation half.
#[derive(Debug, Clone)]
pub struct SplitObsData {
    pub o1: Dataset,
    pub o2: Dataset,
    /// Indices into the original dataset, sorted.
    pub o1_indices: Vec<usize>,
    /// `true` when `|O₁|` was cut below the requested `n_c`.
    pub truncated: bool,
}

/// Draws `O₁` uniformly without replacement with size `min(n_c, ⌊n_o/2⌋)`;
/// `O₂` is the complement.
pub fn split_obs(data: &Dataset, n_c: usize, rng: &mut Rng) -> Result<SplitObsData> {
    let n_o = data.len();
    if n_o < 2 {
        return Err(Error::domain(format!(
            "observational data needs at least 2 rows to split, got {n_o}"
        )));
    }
    let size = n_c.min(n_o / 2);
    let truncated = size < n_c;
    if truncated {
        log::warn!("O1 truncated from n_c = {n_c} to {size} to keep O2 nonempty (n_o = {n_o})");
    }
    let mut o1_indices = rng.sample_without_replacement(n_o, size)?;
    o1_indices.sort_unstable();
    let mut in_o1 = vec![false; n_o];
    for &i in &o1_indices {
        in_o1[i] = true;
    }
    let o2_indices: Vec<usize> = (0..n_o).filter(|&i| !in_o1[i]).collect();
    Ok(SplitObsData {
        o1: data.subset(&o1_indices),
        o2: data.subset(&o2_indices),
        o1_indices,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(n: usize) -> Dataset {
        let y: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let a: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let x = Matrix::from_columns(&[y.clone()], n).unwrap();
        Dataset::new(y, a, x, Source::Obs).unwrap()
    }

    #[test]
    fn validation() {
        assert!(Dataset::without_covariates(vec![], vec![], Source::Rct).is_err());
        assert!(Dataset::without_covariates(vec![1.0], vec![2], Source::Rct).is_err());
        assert!(Dataset::without_covariates(vec![1.0, 2.0], vec![1], Source::Rct).is_err());
        assert!(Dataset::without_covariates(vec![f64::NAN], vec![1], Source::Rct).is_err());
        assert!(RctDesign::Constant(1.0).validate(3).is_err());
        assert!(RctDesign::PerRow(vec![0.5, 0.0]).validate(2).is_err());
        assert!(RctDesign::PerRow(vec![0.5]).validate(2).is_err());
        assert!(RctDesign::PerRow(vec![0.5, 0.2]).validate(2).is_ok());
    }

    #[test]
    fn split_sizes() {
        let mut rng = Rng::new(3);
        let s = split_obs(&obs(10_000), 250, &mut rng).unwrap();
        assert_eq!((s.o1.len(), s.o2.len()), (250, 9750));
        assert!(!s.truncated);

        let s = split_obs(&obs(300), 250, &mut rng).unwrap();
        assert_eq!((s.o1.len(), s.o2.len()), (150, 150));
        assert!(s.truncated);

        let data = obs(40);
        let s = split_obs(&data, 0, &mut rng).unwrap();
        assert!(s.o1.is_empty());
        assert_eq!(s.o2, data);

        assert!(split_obs(&obs(1), 1, &mut rng).is_err());
    }

    #[test]
    fn split_partitions_rows() {
        let mut rng = Rng::new(9);
        let data = obs(101);
        let s = split_obs(&data, 30, &mut rng).unwrap();
        let mut all: Vec<f64> = s.o1.outcome().iter().chain(s.o2.outcome()).copied().collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(all, data.outcome());
    }
}
