//! Dense symmetric-matrix helpers shared by the models and the solvers.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

pub type Mat = DMatrix<f64>;

/// Trace inner product `<A, B> = tr(A B)` for symmetric arguments.
pub fn trace_inner(a: &Mat, b: &Mat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn cholesky(m: &Mat) -> Option<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone())
}

/// `log det M` when `M` is positive definite.
pub fn log_det_pd(m: &Mat) -> Option<f64> {
    let c = cholesky(m)?;
    let l = c.l_dirty();
    Some(2.0 * (0..m.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// Inverse and log-determinant of a positive definite matrix.
pub fn inverse_and_log_det(m: &Mat) -> Option<(Mat, f64)> {
    let c = cholesky(m)?;
    let l = c.l_dirty();
    let ld = 2.0 * (0..m.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>();
    if !ld.is_finite() {
        return None;
    }
    Some((symmetrize(&c.inverse()), ld))
}

pub fn eigen(m: &Mat) -> SymmetricEigen<f64, Dyn> {
    SymmetricEigen::new(symmetrize(m))
}

pub fn min_eigen(m: &Mat) -> f64 {
    eigen(m).eigenvalues.min()
}

/// Smallest eigenvalue and a unit eigenvector for it.
pub fn min_eigenpair(m: &Mat) -> (f64, nalgebra::DVector<f64>) {
    let e = eigen(m);
    let (i, &lam) = e
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty matrix");
    (lam, e.eigenvectors.column(i).into_owned())
}

/// Spectral norm of a symmetric matrix.
pub fn spectral_norm(m: &Mat) -> f64 {
    eigen(m).eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &Mat, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().fold(0.0f64, |a, &x| a.max(x));
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

pub fn standard_normal_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Symmetric matrix with independent standard normal upper-triangle entries.
pub fn random_symmetric<R: Rng>(n: usize, rng: &mut R) -> Mat {
    let a = standard_normal_matrix(n, n, rng);
    symmetrize(&a)
}
