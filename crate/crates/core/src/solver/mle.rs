//! Gaussian MLE over a linear concentration model:
//! minimize `f(K) = tr(S K) - log det K` over `K` in `L` and positive definite.
//!
//! Damped Newton in basis coordinates. With `K = sum_k theta_k B_k` the
//! gradient is `g_k = tr((S - K^-1) B_k)` and the Hessian is
//! `H_kl = tr(K^-1 B_k K^-1 B_l)`. Steps are halved until the iterate stays in
//! the PD cone (Cholesky succeeds) and the Armijo condition holds.
//!
//! `S` is rescaled to unit mean diagonal before iterating, so the divergence
//! thresholds and the stopping tolerance are relative to `tr(S) / n` and the
//! verdict does not depend on the scale of `S`.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{row_major, SampleCovariance};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::models::{contains_pd, project_onto, LinearSubspaceModel};

#[derive(Clone, Debug)]
pub struct MleOptions {
    /// Stopping tolerance on `||P_L(S - K^-1)||_F` for `S` scaled to unit mean
    /// diagonal. `None` means `1e-8 * n`.
    pub tol: Option<f64>,
    pub max_iter: usize,
    /// Divergence threshold on `||K||_F` (scaled problem).
    pub k_norm_limit: f64,
    /// Divergence threshold on the objective (scaled problem).
    pub objective_limit: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            tol: None,
            max_iter: 500,
            k_norm_limit: 1e8,
            objective_limit: -1e10,
        }
    }
}

impl MleOptions {
    pub fn tolerance(&self, n: usize) -> f64 {
        self.tol.unwrap_or(1e-8 * n as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MleVerdict {
    Exists,
    Nonexistent,
    Undetermined,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct MleDiagnostics {
    /// `||K||_F` of the last iterate (scaled problem).
    pub k_norm: f64,
    /// A Newton direction was PSD with `tr(S D) <= 0`: a recession ray.
    pub ray_detected: bool,
    pub line_search_failures: usize,
    /// Squared Newton decrement `g^T H^-1 g` at the last iterate.
    pub newton_decrement: f64,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct MleOutcome {
    pub verdict: MleVerdict,
    /// The optimizer, when it exists.
    pub k: Option<Mat>,
    /// `tr(S K) - log det K` at the last iterate, in the original scale.
    pub objective: f64,
    /// `||P_L(S - K^-1)||_F` at the last iterate, in the original scale.
    pub grad_norm: f64,
    pub iterations: usize,
    pub diagnostics: MleDiagnostics,
}

impl MleOutcome {
    /// `{verdict, objective, grad_norm, iterations, matrix?, diagnostics}`.
    pub fn to_json(&self, include_matrix: bool) -> serde_json::Value {
        let mut v = json!({
            "verdict": self.verdict,
            "objective": finite_or_null(self.objective),
            "grad_norm": finite_or_null(self.grad_norm),
            "iterations": self.iterations,
            "diagnostics": self.diagnostics,
        });
        if include_matrix {
            if let Some(k) = &self.k {
                v["matrix"] = json!(row_major(k));
            }
        }
        v
    }
}

pub(crate) fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

/// `tr(S K) - log det K`, or `None` when `K` is not positive definite.
pub fn objective(s: &Mat, k: &Mat) -> Option<f64> {
    Some(linalg::trace_inner(s, k) - linalg::log_det_pd(k)?)
}

/// `||P_L(S - K^-1)||_F`; zero exactly at the optimum.
pub fn kkt_residual(model: &LinearSubspaceModel, s: &SampleCovariance, k: &Mat) -> Result<f64> {
    let (w, _) = linalg::inverse_and_log_det(k)
        .ok_or_else(|| Error::Domain("K is not positive definite".into()))?;
    Ok(project_onto(model, &(s.matrix() - w)).norm())
}

/// Bound on the squared Newton decrement required, with the gradient
/// tolerance, before declaring convergence.
pub const NEWTON_DECREMENT_TOL: f64 = 1e-10;

pub fn fit_mle(
    model: &LinearSubspaceModel,
    s: &SampleCovariance,
    opts: &MleOptions,
) -> Result<MleOutcome> {
    if model.n() != s.n() {
        return Err(Error::Domain(format!(
            "model is {0} x {0} but S is {1} x {1}",
            model.n(),
            s.n()
        )));
    }
    let pd = contains_pd(model);
    if !pd.contains() {
        return Err(Error::Precondition(
            "model subspace contains no positive definite matrix".into(),
        ));
    }
    let n = model.n();
    let scale = s.matrix().trace() / n as f64;
    if scale <= 0.0 {
        return Ok(MleOutcome {
            verdict: MleVerdict::Nonexistent,
            k: None,
            objective: f64::NEG_INFINITY,
            grad_norm: f64::NAN,
            iterations: 0,
            diagnostics: MleDiagnostics {
                reason: "S = 0: the objective is unbounded below".into(),
                ..Default::default()
            },
        });
    }
    let st = s.matrix() / scale;
    let tol = opts.tolerance(n);
    let basis = model.basis();
    let m = basis.len();

    let w0 = &pd.witness;
    let k0 = w0 * (n as f64 / linalg::trace_inner(&st, w0));
    let mut theta = model.coords_of(&k0);
    let mut k = model.from_coords(&theta);
    let mut diag = MleDiagnostics::default();
    let mut grad_norm = f64::NAN;
    let mut f = f64::NAN;

    let finish = |verdict: MleVerdict, k: &Mat, f: f64, grad_norm: f64, it: usize, diag: MleDiagnostics| {
        MleOutcome {
            verdict,
            k: (verdict == MleVerdict::Exists).then(|| k / scale),
            objective: f + n as f64 * scale.ln(),
            grad_norm: grad_norm * scale,
            iterations: it,
            diagnostics: diag,
        }
    };

    for it in 0..opts.max_iter {
        let Some((w, logdet)) = linalg::inverse_and_log_det(&k) else {
            return Err(Error::Numerical("iterate left the positive definite cone".into()));
        };
        f = linalg::trace_inner(&st, &k) - logdet;
        let resid = &st - &w;
        grad_norm = project_onto(model, &resid).norm();
        diag.k_norm = k.norm();
        if diag.k_norm > opts.k_norm_limit || f < opts.objective_limit {
            diag.reason = format!(
                "divergence: ||K||_F = {:.3e}, objective = {:.3e}",
                diag.k_norm, f
            );
            return Ok(finish(MleVerdict::Nonexistent, &k, f, grad_norm, it, diag));
        }

        let g = nalgebra::DVector::from_vec(model.pair_with_basis(&resid));
        let wbw: Vec<Mat> = basis.iter().map(|b| &w * b * &w).collect();
        let mut h = Mat::from_fn(m, m, |a, b| linalg::trace_inner(&wbw[a], &basis[b]));
        h = linalg::symmetrize(&h);
        let step = match h.clone().cholesky() {
            Some(c) => c.solve(&(-&g)),
            None => {
                let ridge = 1e-12 * h.diagonal().max().max(1e-300);
                let hr = &h + Mat::identity(m, m) * ridge;
                match hr.cholesky() {
                    Some(c) => c.solve(&(-&g)),
                    None => -&g,
                }
            }
        };
        let slope = g.dot(&step);
        diag.newton_decrement = (-slope).max(0.0);
        // A small gradient alone is not enough: along a diverging ray the
        // gradient decays like 1/t while the decrement stays near 1.
        if grad_norm <= tol && diag.newton_decrement <= NEWTON_DECREMENT_TOL {
            diag.reason = "projected gradient and Newton decrement below tolerance".into();
            return Ok(finish(MleVerdict::Exists, &k, f, grad_norm, it, diag));
        }
        let dir = model.from_coords(step.as_slice());

        let dnorm = dir.norm();
        if dnorm > 0.0
            && linalg::min_eigen(&dir) >= -1e-10 * dnorm
            && linalg::trace_inner(&st, &dir) <= 1e-11 * dnorm
        {
            diag.ray_detected = true;
            diag.reason = "Newton direction is a PSD recession ray with tr(S D) <= 0".into();
            return Ok(finish(MleVerdict::Nonexistent, &k, f, grad_norm, it, diag));
        }

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &k + &dir * t;
            if let Some(fc) = objective(&st, &cand) {
                if fc <= f + 0.25 * t * slope {
                    for (th, d) in theta.iter_mut().zip(step.iter()) {
                        *th += t * d;
                    }
                    k = model.from_coords(&theta);
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            diag.line_search_failures += 1;
            diag.reason = "line search could not make progress".into();
            return Ok(finish(MleVerdict::Undetermined, &k, f, grad_norm, it + 1, diag));
        }
    }
    diag.reason = format!("iteration cap {} reached", opts.max_iter);
    Ok(finish(
        MleVerdict::Undetermined,
        &k,
        f,
        grad_norm,
        opts.max_iter,
        diag,
    ))
}
