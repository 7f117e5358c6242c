use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix. Used for covariate tables (one row per subject)
/// and small Gram matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::domain(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from a slice of equally long rows. An empty slice gives a
    /// `0 x cols` matrix only through [`Matrix::zeros`].
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::domain(format!(
                    "ragged matrix: row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Column-major input, e.g. one vector per covariate.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C], rows: usize) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(Error::domain(format!(
                    "column {j} has {} entries, expected {rows}",
                    c.len()
                )));
            }
            for (i, &v) in c.iter().enumerate() {
                m.data[i * m.cols + j] = v;
            }
        }
        Ok(m)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Prepends a column of ones.
    pub fn with_intercept(&self) -> Self {
        let cols = self.cols + 1;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.push(1.0);
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: self.rows,
            cols,
            data,
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let r = self.row(i);
            data.extend(cols.iter().map(|&j| r[j]));
        }
        Self {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }

    /// Stacks `other` below `self`; column counts must agree.
    pub fn vstack(&self, other: &Matrix) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::domain(format!(
                "cannot stack {} columns on {} columns",
                other.cols, self.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    /// `X β` for a coefficient vector of length `ncols`.
    pub fn mul_vec(&self, beta: &[f64]) -> Vec<f64> {
        debug_assert_eq!(beta.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), beta)).collect()
    }

    /// Weighted Gram matrix `Xᵀ diag(w) X` (row-major, `cols x cols`).
    pub fn weighted_gram(&self, weights: Option<&[f64]>) -> Vec<f64> {
        let p = self.cols;
        let mut g = vec![0.0; p * p];
        for i in 0..self.rows {
            let w = weights.map_or(1.0, |w| w[i]);
            if w == 0.0 {
                continue;
            }
            let r = self.row(i);
            for a in 0..p {
                let wa = w * r[a];
                for b in a..p {
                    g[a * p + b] += wa * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g[a * p + b] = g[b * p + a];
            }
        }
        g
    }

    /// `Xᵀ v`.
    pub fn transpose_mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o += x * vi;
            }
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relative pivot below which a column is treated as linearly dependent.
const PIVOT_TOL: f64 = 1e-10;

/// Solves `G x = rhs` for symmetric positive definite `G` (row-major `p x p`)
/// by Cholesky. A pivot smaller than `1e-10` times the original diagonal
/// entry is reported as [`Error::SingularDesign`] naming that column.
pub fn cholesky_solve(gram: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let p = rhs.len();
    assert_eq!(gram.len(), p * p, "gram must be p x p");
    let mut l = vec![0.0; p * p];
    for j in 0..p {
        let mut d = gram[j * p + j];
        for k in 0..j {
            d -= l[j * p + k] * l[j * p + k];
        }
        let scale = gram[j * p + j].abs();
        if !(d > PIVOT_TOL * scale) || scale == 0.0 || !d.is_finite() {
            return Err(Error::SingularDesign { column: j });
        }
        let djj = d.sqrt();
        l[j * p + j] = djj;
        for i in j + 1..p {
            let mut s = gram[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = s / djj;
        }
    }
    let mut y = vec![0.0; p];
    for i in 0..p {
        let mut s = rhs[i];
        for k in 0..i {
            s -= l[i * p + k] * y[k];
        }
        y[i] = s / l[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = y[i];
        for k in i + 1..p {
            s -= l[k * p + i] * x[k];
        }
        x[i] = s / l[i * p + i];
    }
    Ok(x)
}

/// Least-squares coefficients; the first entry is the intercept when the
/// design carries one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
}

impl LinearFit {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        dot(row, &self.coefficients)
    }

    pub fn predict(&self, design: &Matrix) -> Vec<f64> {
        design.mul_vec(&self.coefficients)
    }
}

/// Ordinary least squares via the normal equations.
///
/// The refinement step re-solves against the residual once, which recovers
/// exact linear data to ~1e-12 even for moderately conditioned designs.
pub fn ols_fit(design: &Matrix, response: &[f64]) -> Result<LinearFit> {
    let (n, p) = (design.nrows(), design.ncols());
    if response.len() != n {
        return Err(Error::domain(format!(
            "response has {} entries, design has {n} rows",
            response.len()
        )));
    }
    if n < p {
        return Err(Error::domain(format!(
            "least squares needs at least as many rows ({n}) as columns ({p})"
        )));
    }
    let gram = design.weighted_gram(None);
    let mut beta = cholesky_solve(&gram, &design.transpose_mul(response))?;
    let fitted = design.mul_vec(&beta);
    let resid: Vec<f64> = response.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let correction = cholesky_solve(&gram, &design.transpose_mul(&resid))?;
    for (b, c) in beta.iter_mut().zip(correction) {
        *b += c;
    }
    Ok(LinearFit { coefficients: beta })
}
