//! ADMM for box-constrained quadratic programs.
//!
//! The box QP `min 0.5 x'Lx + k'x, 0 <= x <= c` is split as
//! `min f(x) + g(y)  s.t.  x + y = c` with `g` the indicator of `[0, c]`, and
//! iterated in scaled form:
//!
//! ```text
//! x+ = argmin 0.5 x'Lx + k'x + mu/2 |x + y - c + h|^2   (linear solve)
//! y+ = clamp(c - x+ - h, 0, c)                           (projection)
//! h+ = h + x+ + y+ - c                                   (dual update)
//! ```
//!
//! `L + mu I` is factorized once, on the first iteration, and the factor is
//! reused for every later solve.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::duals::BoxQP;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmSettings {
    /// Penalty parameter of the augmented Lagrangian.
    pub mu: f64,
    /// Absolute tolerance.
    pub delta_abs: f64,
    /// Relative tolerance.
    pub delta_rel: f64,
    pub max_iter: usize,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        AdmmSettings {
            mu: 1.0,
            delta_abs: 1e-4,
            delta_rel: 1e-3,
            max_iter: 5000,
        }
    }
}

impl AdmmSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        if !(self.delta_abs >= 0.0 && self.delta_rel >= 0.0) {
            return Err(Error::InvalidParameter(
                "tolerances must be non-negative".into(),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "max_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIterReached,
}

/// One recorded iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub primal_threshold: f64,
    pub dual_threshold: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdmmTrace {
    pub records: Vec<TraceRecord>,
}

impl AdmmTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone)]
pub struct AdmmSolution {
    /// Primal iterate, clamped into the box.
    pub pi: DVector<f64>,
    /// Splitting variable; always inside the box.
    pub lambda_slack: DVector<f64>,
    /// `c - lambda`: the primal point carried by the splitting variable.
    /// Feasible, within the primal residual of `pi`, and exactly zero
    /// wherever the projection was active at the upper bound of `lambda`.
    pub split_pi: DVector<f64>,
    /// Scaled dual variable.
    pub h: DVector<f64>,
    pub status: Status,
    pub iterations: usize,
    pub trace: AdmmTrace,
    /// Number of Cholesky factorizations performed.
    pub factorizations: usize,
}

impl AdmmSolution {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

/// `0.5 x'Lx + k'x`.
pub fn objective(qp: &BoxQP, x: &DVector<f64>) -> f64 {
    0.5 * x.dot(&(qp.lambda() * x)) + qp.kappa().dot(x)
}

/// Primal and dual stopping thresholds for vectors of length `n`.
pub fn thresholds(
    pi: &DVector<f64>,
    lambda_slack: &DVector<f64>,
    h: &DVector<f64>,
    mu: f64,
    delta_abs: f64,
    delta_rel: f64,
    n: usize,
) -> (f64, f64) {
    let base = delta_abs * (n as f64).sqrt();
    let primal = base + delta_rel * pi.norm().max(lambda_slack.norm());
    let dual = base + delta_rel * mu * h.norm();
    (primal, dual)
}

/// Linear solves against `L + mu I`, factorized on first use.
struct QuadraticStep<'a> {
    qp: &'a BoxQP,
    mu: f64,
    factor: Option<Cholesky<f64, Dyn>>,
    factorizations: usize,
}

impl<'a> QuadraticStep<'a> {
    fn new(qp: &'a BoxQP, mu: f64) -> Self {
        QuadraticStep {
            qp,
            mu,
            factor: None,
            factorizations: 0,
        }
    }

    fn solve(&mut self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        if self.factor.is_none() {
            let n = self.qp.dim();
            let shifted = self.qp.lambda() + DMatrix::<f64>::identity(n, n) * self.mu;
            self.factorizations += 1;
            self.factor = Some(Cholesky::new(shifted).ok_or(Error::Factorization)?);
        }
        Ok(self.factor.as_ref().expect("factorized above").solve(rhs))
    }
}

pub fn solve(qp: &BoxQP, settings: &AdmmSettings) -> Result<AdmmSolution> {
    settings.validate()?;
    let n = qp.dim();
    let c = qp.upper();
    let mu = settings.mu;
    let mut step = QuadraticStep::new(qp, mu);

    let mut pi = DVector::zeros(n);
    let mut slack = DVector::zeros(n);
    let mut h = DVector::zeros(n);
    let mut trace = AdmmTrace::default();
    let mut status = Status::MaxIterReached;

    for k in 1..=settings.max_iter {
        // (L + mu I) x = -k - mu (y - c + h)
        let rhs = -qp.kappa() - (&slack - c + &h) * mu;
        pi = step.solve(&rhs)?;
        if pi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence(k));
        }
        let next_slack = (c - &pi - &h).zip_map(c, |v, ci| v.clamp(0.0, ci));
        let residual = &pi + &next_slack - c;
        h += &residual;
        let dual_residual = (&next_slack - &slack).norm() * mu;
        slack = next_slack;

        let (primal_threshold, dual_threshold) = thresholds(
            &pi,
            &slack,
            &h,
            mu,
            settings.delta_abs,
            settings.delta_rel,
            n,
        );
        let primal_residual = residual.norm();
        trace.records.push(TraceRecord {
            objective: objective(qp, &pi),
            primal_residual,
            dual_residual,
            primal_threshold,
            dual_threshold,
        });
        if primal_residual <= primal_threshold && dual_residual <= dual_threshold {
            status = Status::Converged;
            break;
        }
    }

    Ok(AdmmSolution {
        pi: qp.project(&pi),
        split_pi: c - &slack,
        lambda_slack: slack,
        h,
        status,
        iterations: trace.len(),
        trace,
        factorizations: step.factorizations,
    })
}
