//! Graphical lasso by proximal gradient (ISTA).
//!
//! Minimizes `tr(S K) - log det K + alpha * sum_{i != j} |K_ij|` over positive
//! definite `K`. Each step is a gradient step on the smooth part followed by
//! soft-thresholding of the off-diagonal entries. The step length starts from
//! a Barzilai–Borwein estimate and is halved until the candidate is positive
//! definite and satisfies the standard proximal sufficient-decrease test.

use super::SampleCovariance;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{self, Mat};

#[derive(Clone, Debug)]
pub struct GlassoOptions {
    /// Maximum KKT residual accepted as converged.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative threshold (against `max |K_ij|`) for selecting an edge.
    pub select_tol: f64,
}

impl Default for GlassoOptions {
    fn default() -> Self {
        GlassoOptions {
            tol: 1e-7,
            max_iter: 50_000,
            select_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GlassoFit {
    pub k: Mat,
    pub selected: Graph,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

fn soft(x: f64, thr: f64) -> f64 {
    if x > thr {
        x - thr
    } else if x < -thr {
        x + thr
    } else {
        0.0
    }
}

/// Largest violation of the optimality conditions at `k`:
/// `S_ii = W_ii`; `|S_ij - W_ij| <= alpha` where `K_ij = 0`;
/// `S_ij - W_ij + alpha sign(K_ij) = 0` where `K_ij != 0` (with `W = K^-1`).
pub fn glasso_kkt_residual(s: &Mat, k: &Mat, alpha: f64) -> Option<f64> {
    let (w, _) = linalg::inverse_and_log_det(k)?;
    let n = s.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let g = s[(i, j)] - w[(i, j)];
            let r = if i == j {
                g.abs()
            } else if k[(i, j)] == 0.0 {
                (g.abs() - alpha).max(0.0)
            } else {
                (g + alpha * k[(i, j)].signum()).abs()
            };
            worst = worst.max(r);
        }
    }
    Some(worst)
}

fn smooth_objective(s: &Mat, k: &Mat) -> Option<f64> {
    Some(linalg::trace_inner(s, k) - linalg::log_det_pd(k)?)
}

pub fn glasso(s: &SampleCovariance, alpha: f64, opts: &GlassoOptions) -> Result<GlassoFit> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    let sm = s.matrix();
    let n = sm.nrows();
    if let Some(i) = (0..n).find(|&i| !(sm[(i, i)] > 0.0)) {
        return Err(Error::Domain(format!(
            "diagonal entry S[{0},{0}] is not positive",
            i + 1
        )));
    }
    let prox = |m: &Mat, step: f64| -> Mat {
        Mat::from_fn(n, n, |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                soft(0.5 * (m[(i, j)] + m[(j, i)]), step * alpha)
            }
        })
    };

    let mut k = Mat::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| 1.0 / (sm[(i, i)] + alpha)));
    let (w0, _) = linalg::inverse_and_log_det(&k).expect("diagonal start is PD");
    let mut f = smooth_objective(sm, &k).expect("diagonal start is PD");
    let mut grad = sm - &w0;
    let mut step = {
        let lam = k.diagonal().min();
        lam * lam
    };
    let mut iterations = 0;
    let mut residual = glasso_kkt_residual(sm, &k, alpha).unwrap_or(f64::INFINITY);

    while residual > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let mut t = step;
        let mut next = None;
        for _ in 0..80 {
            let cand = prox(&(&k - &grad * t), t);
            let diff = &cand - &k;
            if let Some(fc) = smooth_objective(sm, &cand) {
                let model = f + linalg::trace_inner(&grad, &diff) + diff.norm_squared() / (2.0 * t);
                if fc <= model + 1e-12 * f.abs().max(1.0) {
                    next = Some((cand, fc));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = next else {
            break;
        };
        let (w_new, _) = linalg::inverse_and_log_det(&cand).expect("accepted iterate is PD");
        let grad_new = sm - &w_new;
        // Barzilai–Borwein estimate for the next trial step.
        let dk = &cand - &k;
        let dg = &grad_new - &grad;
        let curv = linalg::trace_inner(&dk, &dg);
        step = if curv > 0.0 {
            (dk.norm_squared() / curv).clamp(1e-10, 1e10)
        } else {
            t * 2.0
        };
        k = cand;
        f = fc;
        grad = grad_new;
        residual = glasso_kkt_residual(sm, &k, alpha).unwrap_or(f64::INFINITY);
    }

    let kmax = k.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let edges = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| k[(i, j)].abs() > opts.select_tol * kmax)
        .map(|(i, j)| (i + 1, j + 1));
    let selected = Graph::new(n, edges)?;
    Ok(GlassoFit {
        k,
        selected,
        iterations,
        kkt_residual: residual,
        converged: residual <= opts.tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Provenance;

    fn cov(m: Mat) -> SampleCovariance {
        SampleCovariance::from_matrix(m, Provenance::Matrix).unwrap()
    }

    #[test]
    fn large_alpha_gives_diagonal_inverse() {
        let s = SampleCovariance::synthetic(5, 12, 4);
        let sm = s.matrix();
        let max_off = (0..5)
            .flat_map(|i| (0..5).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| sm[(i, j)].abs())
            .fold(0.0f64, f64::max);
        let fit = glasso(&s, max_off * 1.01, &GlassoOptions::default()).unwrap();
        assert_eq!(fit.selected.num_edges(), 0);
        for i in 0..5 {
            assert!((fit.k[(i, i)] - 1.0 / sm[(i, i)]).abs() < 1e-6 / sm[(i, i)]);
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        // Oracle: with K = [[a, b], [b, a]], stationarity gives a^2 - b^2 = a and
        // b = a (alpha - 1/2); solve the scalar equation for a by bisection.
        let alpha = 0.1;
        let r = |a: f64| a * a * (1.0 - (alpha - 0.5f64).powi(2)) - a;
        let (mut lo, mut hi) = (1.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if r(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let a = 0.5 * (lo + hi);
        let b = a * (alpha - 0.5);
        let s = cov(Mat::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]));
        let fit = glasso(&s, alpha, &GlassoOptions::default()).unwrap();
        assert!((fit.k[(0, 1)] - b).abs() < 1e-6, "{} vs {b}", fit.k[(0, 1)]);
        assert!((fit.k[(0, 0)] - a).abs() < 1e-6);
        assert_eq!(fit.selected.num_edges(), 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = SampleCovariance::synthetic(3, 5, 1);
        assert!(glasso(&s, 0.0, &GlassoOptions::default()).is_err());
        let mut m = Mat::identity(3, 3);
        m[(1, 1)] = 0.0;
        assert!(glasso(&cov(m), 0.1, &GlassoOptions::default()).is_err());
    }
}
