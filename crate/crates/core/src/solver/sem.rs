//! Directed Gaussian structural equation models fitted by per-vertex least
//! squares: each variable is regressed on its parents.
//!
//! The likelihood is bounded only when every parent Gram matrix is invertible
//! and every residual is nonzero (a zero residual sends the noise variance
//! `D_jj` to zero).

use serde::{Deserialize, Serialize};

use super::MleVerdict;
use crate::linalg::{self, Mat};
use crate::models::SemModel;

/// Relative residual norm below which a regression counts as an exact fit.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SemFit {
    /// `lambda[(i, j)]` is the coefficient of arc `i -> j` (0-indexed).
    #[serde(skip)]
    pub lambda: Mat,
    /// Residual sums of squares, one per vertex.
    pub d: Vec<f64>,
    pub verdict: MleVerdict,
    /// 1-indexed vertices whose regression breaks the likelihood.
    pub failing_vertices: Vec<usize>,
}

/// `data` is `n x d` with observations as columns.
pub fn sem_fit(model: &SemModel, data: &Mat) -> SemFit {
    let g = &model.digraph;
    let n = g.n();
    assert_eq!(data.nrows(), n, "data must have one row per vertex");
    let mut lambda = Mat::zeros(n, n);
    let mut d = vec![0.0; n];
    let mut failing = Vec::new();
    for j in 1..=n {
        let row = data.row(j - 1).transpose();
        let parents = g.parents(j);
        let (resid, ok_gram) = if parents.is_empty() {
            (row.clone(), true)
        } else {
            let xp = Mat::from_fn(parents.len(), data.ncols(), |r, c| data[(parents[r] - 1, c)]);
            let full_rank = linalg::numerical_rank(&xp, 1e-10) == parents.len();
            let gram = &xp * xp.transpose();
            match (full_rank, gram.cholesky()) {
                (true, Some(chol)) => {
                    let beta = chol.solve(&(&xp * &row));
                    for (p, b) in parents.iter().zip(beta.iter()) {
                        lambda[(p - 1, j - 1)] = *b;
                    }
                    (&row - xp.transpose() * beta, true)
                }
                _ => (row.clone(), false),
            }
        };
        d[j - 1] = resid.norm_squared();
        let ok_resid = resid.norm() > RESIDUAL_TOL * row.norm();
        if !(ok_gram && ok_resid) {
            failing.push(j);
        }
    }
    SemFit {
        lambda,
        d,
        verdict: if failing.is_empty() {
            MleVerdict::Exists
        } else {
            MleVerdict::Nonexistent
        },
        failing_vertices: failing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Digraph;
    use crate::seed;

    fn star() -> SemModel {
        SemModel::new(Digraph::new(4, [(1, 4), (2, 4), (3, 4)]).unwrap())
    }

    #[test]
    fn arcless_digraph_uses_row_norms() {
        let model = SemModel::new(Digraph::new(3, []).unwrap());
        let data = Mat::from_row_slice(3, 2, &[1.0, 2.0, 0.5, 0.0, -3.0, 4.0]);
        let fit = sem_fit(&model, &data);
        assert_eq!(fit.verdict, MleVerdict::Exists);
        assert_eq!(fit.lambda, Mat::zeros(3, 3));
        assert_eq!(fit.d, vec![5.0, 0.25, 25.0]);
    }

    #[test]
    fn star_below_in_degree_fails() {
        let data = linalg::standard_normal_matrix(4, 2, &mut seed::rng(1));
        let fit = sem_fit(&star(), &data);
        assert_eq!(fit.verdict, MleVerdict::Nonexistent);
        assert_eq!(fit.failing_vertices, vec![4]);
    }

    #[test]
    fn star_at_in_degree_fits_exactly() {
        // Three generic samples of three parents span R^3: the child is
        // reproduced exactly and its residual vanishes.
        let data = linalg::standard_normal_matrix(4, 3, &mut seed::rng(2));
        let fit = sem_fit(&star(), &data);
        assert_eq!(fit.failing_vertices, vec![4]);
        assert!(fit.d[3] < 1e-20);
    }

    #[test]
    fn star_above_in_degree_exists() {
        let data = linalg::standard_normal_matrix(4, 4, &mut seed::rng(3));
        let fit = sem_fit(&star(), &data);
        assert_eq!(fit.verdict, MleVerdict::Exists);
        // Residual is orthogonal to every parent row.
        let row = data.row(3).transpose();
        let mut resid = row.clone();
        for p in 0..3 {
            resid -= data.row(p).transpose() * fit.lambda[(p, 3)];
        }
        for p in 0..3 {
            assert!(resid.dot(&data.row(p).transpose()).abs() < 1e-10);
        }
        assert!((resid.norm_squared() - fit.d[3]).abs() < 1e-10);
    }
}
