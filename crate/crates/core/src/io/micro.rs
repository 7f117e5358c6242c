use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimators::{Dataset, Source};
use crate::math::Matrix;

use super::fmt_num;

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads `y,a,x1,...,xk`. When `probability_column` names a column it is
/// returned separately and excluded from the covariates.
pub fn read_micro_str(
    text: &str,
    source: Source,
    probability_column: Option<&str>,
) -> Result<(Dataset, Option<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.len() < 2 || header[0] != "y" || header[1] != "a" {
        return Err(parse_err(1, format!("header must start with 'y,a', got '{}'", header.join(","))));
    }
    let prob_idx = match probability_column {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .filter(|&i| i >= 2)
                .ok_or_else(|| parse_err(1, format!("no probability column '{name}' in header")))?,
        ),
        None => None,
    };
    let cov_idx: Vec<usize> = (2..header.len()).filter(|&i| Some(i) != prob_idx).collect();

    let (mut y, mut a, mut x, mut probs) = (vec![], vec![], vec![], vec![]);
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(parse_err(line, format!("expected {} fields, got {}", header.len(), rec.len())));
        }
        let num = |j: usize| -> Result<f64> {
            let v: f64 = rec[j].trim().parse().map_err(|_| {
                parse_err(line, format!("{}: '{}' is not a number", header[j], &rec[j]))
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(line, format!("{}: '{}' is not finite", header[j], &rec[j])))
            }
        };
        y.push(num(0)?);
        a.push(match rec[1].trim() {
            "0" => 0,
            "1" => 1,
            other => return Err(parse_err(line, format!("a must be 0 or 1, got '{other}'"))),
        });
        for &j in &cov_idx {
            x.push(num(j)?);
        }
        if let Some(j) = prob_idx {
            probs.push(num(j)?);
        }
    }
    if y.is_empty() {
        return Err(parse_err(2, "no data rows"));
    }
    let n = y.len();
    let covariates = Matrix::from_row_major(n, cov_idx.len(), x)?;
    let data = Dataset::new(y, a, covariates, source)?;
    Ok((data, prob_idx.map(|_| probs)))
}

pub fn parse_micro_csv_with(
    path: impl AsRef<Path>,
    source: Source,
    probability_column: Option<&str>,
) -> Result<(Dataset, Option<Vec<f64>>)> {
    read_micro_str(&std::fs::read_to_string(path)?, source, probability_column)
}

pub fn parse_micro_csv(path: impl AsRef<Path>, source: Source) -> Result<Dataset> {
    Ok(parse_micro_csv_with(path, source, None)?.0)
}

pub fn micro_csv_string(data: &Dataset) -> String {
    let mut out = String::from("y,a");
    for j in 0..data.n_covariates() {
        write!(out, ",x{}", j + 1).unwrap();
    }
    out.push('\n');
    for i in 0..data.len() {
        write!(out, "{},{}", fmt_num(data.outcome()[i]), data.treatment()[i]).unwrap();
        for &v in data.covariates().row(i) {
            write!(out, ",{}", fmt_num(v)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_micro_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    std::fs::write(path, micro_csv_string(data))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_file() {
        let text = "y,a,x1,x2\n1.5,1,0.1,2\n-2,0,3e-1,4\n0,1,1,1\n";
        let (d, p) = read_micro_str(text, Source::Rct, None).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.n_covariates(), 2);
        assert_eq!(d.covariates().get(1, 0), 0.3);
        assert!(p.is_none());
    }

    #[test]
    fn probability_column() {
        let text = "y,a,pi,x1\n1,1,0.3,5\n2,0,0.4,6\n";
        let (d, p) = read_micro_str(text, Source::Rct, Some("pi")).unwrap();
        assert_eq!(p.unwrap(), vec![0.3, 0.4]);
        assert_eq!(d.covariates().column(0), vec![5.0, 6.0]);
        assert!(read_micro_str(text, Source::Rct, Some("nope")).is_err());
    }

    #[test]
    fn errors() {
        let ragged = "y,a,x1\n1,1,0\n2,0\n";
        assert!(matches!(read_micro_str(ragged, Source::Rct, None), Err(Error::Parse { line: 3, .. })));
        let bad_a = "y,a\n1,2\n";
        assert!(matches!(read_micro_str(bad_a, Source::Rct, None), Err(Error::Parse { line: 2, .. })));
        assert!(read_micro_str("a,y\n1,1\n", Source::Rct, None).is_err());
        assert!(read_micro_str("y,a\n", Source::Rct, None).is_err());
    }

    #[test]
    fn round_trip_is_lossless() {
        let mut rng = crate::math::Rng::new(5);
        let n = 100_000;
        let cols: Vec<Vec<f64>> = (0..2).map(|_| (0..n).map(|_| rng.normal() * 1e3).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.normal() / 7.0).collect();
        let a: Vec<u8> = (0..n).map(|_| rng.bernoulli(0.5)).collect();
        let d = Dataset::new(y, a, Matrix::from_columns(&cols, n).unwrap(), Source::Obs).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_micro_csv(&path, &d).unwrap();
        assert_eq!(parse_micro_csv(&path, Source::Obs).unwrap(), d);
    }
}
