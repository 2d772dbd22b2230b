//! Projected-gradient reference solver for [`BoxQP`], used to cross-check ADMM.
//!
//! Deliberately plain: fixed step `1/L` with `L` a power-iteration estimate of
//! the largest eigenvalue, no momentum, no linear solves.

use nalgebra::DVector;

use crate::duals::BoxQP;
use crate::error::{Error, Result};

const POWER_ITERATIONS: usize = 20;
const SAFETY: f64 = 1.1;

/// Upper estimate of the largest eigenvalue of the (PSD) quadratic form.
pub fn lipschitz_bound(qp: &BoxQP) -> f64 {
    let n = qp.dim();
    if n == 0 {
        return 0.0;
    }
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = qp.lambda() * &v;
        let norm = w.norm();
        if norm == 0.0 {
            break;
        }
        estimate = norm;
        v = w / norm;
    }
    // power iteration approaches the top eigenvalue from below
    SAFETY * estimate
}

fn projected_gradient_norm(qp: &BoxQP, x: &DVector<f64>) -> f64 {
    let grad = qp.lambda() * x + qp.kappa();
    (x - qp.project(&(x - grad))).norm()
}

/// One step `P(x - step * grad)`.
pub fn projected_gradient_step(qp: &BoxQP, x: &DVector<f64>, step: f64) -> DVector<f64> {
    let grad = qp.lambda() * x + qp.kappa();
    qp.project(&(x - grad * step))
}

/// Minimizes the box QP by projected gradient descent, stopping when the
/// projected-gradient norm `|x - P(x - grad)|` falls to `tol`.
pub fn projected_gradient_solve(qp: &BoxQP, tol: f64, max_iter: usize) -> Result<DVector<f64>> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = qp.dim();
    let mut x = DVector::zeros(n);
    let lip = lipschitz_bound(qp);
    if lip == 0.0 {
        // linear objective: the minimizer sits at a box corner
        return Ok(DVector::from_fn(n, |i, _| {
            if qp.kappa()[i] < 0.0 {
                qp.upper()[i]
            } else {
                0.0
            }
        }));
    }
    let step = 1.0 / lip;
    let mut gradient_norm = projected_gradient_norm(qp, &x);
    for _ in 0..max_iter {
        if gradient_norm <= tol {
            return Ok(x);
        }
        x = projected_gradient_step(qp, &x, step);
        gradient_norm = projected_gradient_norm(qp, &x);
    }
    if gradient_norm <= tol {
        return Ok(x);
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        gradient_norm,
        best: x.iter().copied().collect(),
    })
}
