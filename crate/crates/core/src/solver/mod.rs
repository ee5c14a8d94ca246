//! Maximum likelihood fitting and the MLE-existence deciders.
//!
//! Conventions: `n` is the dimension and `d` the number of observations.
//! Data matrices are `n x d` with observations as columns; CSV files store one
//! observation per row and are transposed on load.

mod completion;
mod glasso;
mod mle;
mod sem;

pub use completion::{completion_feasible, CompletionOutcome, CompletionVerdict};
pub use glasso::{glasso, glasso_kkt_residual, GlassoFit, GlassoOptions};
pub use mle::{fit_mle, kkt_residual, objective, MleDiagnostics, MleOptions, MleOutcome, MleVerdict};
pub use sem::{sem_fit, SemFit};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::seed;

/// Relative eigenvalue tolerance for the numerical rank of `S`.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Provenance {
    Data { file: String },
    Synthetic { seed: u64 },
    Matrix,
}

/// A symmetric PSD Gram matrix `S` with its numerical rank.
#[derive(Clone, Debug)]
pub struct SampleCovariance {
    s: Mat,
    rank: usize,
    provenance: Provenance,
}

impl SampleCovariance {
    /// Validates symmetry and positive semidefiniteness and records the
    /// numerical rank (eigenvalues above `1e-8 * ||S||`).
    pub fn from_matrix(s: Mat, provenance: Provenance) -> Result<Self> {
        if s.nrows() != s.ncols() || s.nrows() == 0 {
            return Err(Error::Domain("sample covariance must be square and nonempty".into()));
        }
        let scale = s.norm();
        if (&s - s.transpose()).norm() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Domain("sample covariance is not symmetric".into()));
        }
        let s = linalg::symmetrize(&s);
        let eig = linalg::eigen(&s).eigenvalues;
        let top = eig.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        if eig.min() < -1e-9 * top {
            return Err(Error::Domain(format!(
                "sample covariance is not positive semidefinite (smallest eigenvalue {:.3e})",
                eig.min()
            )));
        }
        let rank = eig.iter().filter(|&&x| x > RANK_TOL * top).count();
        Ok(SampleCovariance { s, rank, provenance })
    }

    /// `S = sum_i (x_i - mu)(x_i - mu)^T` with centering, `X X^T` without.
    /// No `1/d` normalization.
    pub fn from_data(data: &Mat, center: bool, provenance: Provenance) -> Result<Self> {
        if data.ncols() == 0 || data.nrows() == 0 {
            return Err(Error::Domain("data matrix has no observations".into()));
        }
        let x = if center {
            let mean = data.column_mean();
            let mut c = data.clone();
            for mut col in c.column_iter_mut() {
                col -= &mean;
            }
            c
        } else {
            data.clone()
        };
        let s = linalg::symmetrize(&(&x * x.transpose()));
        SampleCovariance::from_matrix(s, provenance)
    }

    /// `S = X X^T` for an `n x d` standard normal `X` drawn from `seed`.
    pub fn synthetic(n: usize, d: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let x = linalg::standard_normal_matrix(n, d, &mut rng);
        let s = linalg::symmetrize(&(&x * x.transpose()));
        SampleCovariance::from_matrix(s, Provenance::Synthetic { seed })
            .expect("Gram matrices are PSD")
    }

    pub fn n(&self) -> usize {
        self.s.nrows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.s
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn scaled(&self, c: f64) -> Self {
        SampleCovariance {
            s: &self.s * c,
            rank: self.rank,
            provenance: self.provenance.clone(),
        }
    }
}

/// `sample_covariance` in the operation vocabulary: `data` is `n x d`.
pub fn sample_covariance(data: &Mat, center: bool) -> Result<SampleCovariance> {
    SampleCovariance::from_data(data, center, Provenance::Matrix)
}

/// Parses numeric CSV rows. A first row that does not parse as numbers is
/// treated as a header and skipped. All rows must have the same width.
pub fn parse_csv_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| Error::parse(line, e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => {
                if let Some(first) = rows.first() {
                    if first.len() != row.len() {
                        return Err(Error::parse(
                            line,
                            format!("expected {} columns, found {}", first.len(), row.len()),
                        ));
                    }
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(Error::parse(line, "non-finite value"));
                }
                rows.push(row);
            }
            Err(_) if idx == 0 => continue,
            Err(e) => return Err(Error::parse(line, format!("non-numeric field: {e}"))),
        }
    }
    Ok(rows)
}

/// Loads a data CSV (one observation per row) as an `n x d` matrix.
pub fn parse_data_csv(text: &str) -> Result<Mat> {
    let rows = parse_csv_rows(text)?;
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::Domain("data file has no observations".into()));
    }
    let (d, n) = (rows.len(), rows[0].len());
    Ok(Mat::from_fn(n, d, |i, j| rows[j][i]))
}

/// `n x d` standard normal sample.
pub fn gaussian_sample<R: Rng>(n: usize, d: usize, rng: &mut R) -> Mat {
    linalg::standard_normal_matrix(n, d, rng)
}

/// Row-major dump used by the JSON outcome shapes.
pub(crate) fn row_major(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
