//! The multi-task nonparallel SVM: training, hyperplane recovery, prediction
//! and optimality diagnostics.
//!
//! Each task `t` gets two hyperplanes, `u + u_t` (close to its positives, at
//! least 1 away from its negatives on the negative side) and `v + v_t` (close
//! to its negatives, positives pushed to `>= 1`). A sample is assigned to the
//! class whose hyperplane is nearer in the raw `|f(x)|` sense.

use std::ops::Range;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::admm::{self, AdmmSettings, AdmmSolution, AdmmTrace, Status, TraceRecord};
use crate::data::{stack_by_class, Label, MultiTaskDataset, StackedDesign, TaskId};
use crate::duals::{assemble_first, assemble_second, BlockLayout, Problem, Segment};
use crate::error::{Error, Result};
use crate::kernel::{augmented_row, KernelSpec};

/// Default support-vector threshold, relative to the box bound of each block.
pub const DEFAULT_SV_TOL: f64 = 1e-5;
/// Default complementarity tolerance, relative to the box bound.
pub const DEFAULT_KKT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Coupling strength of the positive-class problem.
    pub rho1: f64,
    /// Coupling strength of the negative-class problem.
    pub rho2: f64,
    /// Band penalty, positive-class problem.
    pub c1: f64,
    /// Hinge penalty, positive-class problem.
    pub c2: f64,
    /// Band penalty, negative-class problem.
    pub c3: f64,
    /// Hinge penalty, negative-class problem.
    pub c4: f64,
    /// Half-width of the epsilon band.
    pub epsilon: f64,
    pub kernel: KernelSpec,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            rho1: 1.0,
            rho2: 1.0,
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            c4: 1.0,
            epsilon: 0.1,
            kernel: KernelSpec::linear(),
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        self.kernel.validate()
    }

    /// Parameters for the label-swapped problem: the roles of the two
    /// hyperplanes are exchanged.
    pub fn swapped(&self) -> Hyperparams {
        Hyperparams {
            rho1: self.rho2,
            rho2: self.rho1,
            c1: self.c3,
            c2: self.c4,
            c3: self.c1,
            c4: self.c2,
            ..*self
        }
    }
}

/// Dual coefficients of one problem, split by block.
#[derive(Debug, Clone, PartialEq)]
pub struct DualBlocks {
    /// `alpha*` (lower side of the band).
    pub band_star: DVector<f64>,
    /// `alpha` (upper side of the band).
    pub band: DVector<f64>,
    /// `beta` (hinge on the other class).
    pub hinge: DVector<f64>,
}

impl DualBlocks {
    pub fn from_vector(pi: &DVector<f64>, layout: &BlockLayout) -> Self {
        let take = |s: Segment| pi.rows_range(layout.segment(s)).into_owned();
        DualBlocks {
            band_star: take(Segment::BandStar),
            band: take(Segment::Band),
            hinge: take(Segment::Hinge),
        }
    }

    pub fn zeros(own: usize, other: usize) -> Self {
        DualBlocks {
            band_star: DVector::zeros(own),
            band: DVector::zeros(own),
            hinge: DVector::zeros(other),
        }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let own = self.band.len();
        let mut v = DVector::zeros(2 * own + self.hinge.len());
        v.rows_mut(0, own).copy_from(&self.band_star);
        v.rows_mut(own, own).copy_from(&self.band);
        v.rows_mut(2 * own, self.hinge.len()).copy_from(&self.hinge);
        v
    }

    /// `alpha* - alpha`.
    pub fn band_difference(&self) -> DVector<f64> {
        &self.band_star - &self.band
    }
}

/// Explicit hyperplanes (linear kernel only). Every vector has `d + 1`
/// entries; the last one is the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub u: Vec<f64>,
    pub u_t: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    pub v_t: Vec<Vec<f64>>,
}

impl LinearParams {
    /// `(x, 1) . (u + u_t)` and `(x, 1) . (v + v_t)` for task index `t`.
    pub fn decision_values(&self, x: &[f64], t: usize) -> (f64, f64) {
        let eval = |w: &[f64], wt: &[f64]| {
            let d = x.len();
            let mut s = w[d] + wt[d];
            for j in 0..d {
                s += x[j] * (w[j] + wt[j]);
            }
            s
        };
        (eval(&self.u, &self.u_t[t]), eval(&self.v, &self.v_t[t]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub status: Status,
    pub iterations: usize,
    pub factorizations: usize,
    pub final_record: Option<TraceRecord>,
}

impl SolveSummary {
    fn from_solution(sol: &AdmmSolution) -> Self {
        SolveSummary {
            status: sol.status,
            iterations: sol.iterations,
            factorizations: sol.factorizations,
            final_record: sol.trace.last().copied(),
        }
    }
}

/// Support vector counts of one problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SvCount {
    /// Band-class samples with a nonzero band coefficient.
    pub own: usize,
    /// Hinge-class samples with a nonzero hinge coefficient.
    pub other: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportVectors {
    pub first: SvCount,
    pub second: SvCount,
}

/// Optimality diagnostics of one problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemKkt {
    /// `max_i min(alpha_i, alpha*_i)`; zero at an exact optimum.
    pub complementarity: f64,
    /// Largest distance of any coefficient outside its box.
    pub box_violation: f64,
    /// `|rho w - sum_t X_t' (coefficients)|` for the shared hyperplane (linear kernel).
    pub stationarity_shared: Option<f64>,
    /// Largest per-task analogue for the task offsets (linear kernel).
    pub stationarity_task: Option<f64>,
    /// Largest `|f(x_i) -/+ eps|` over band coefficients strictly inside their box.
    pub band_residual: f64,
    /// Largest `|f(x_j) -/+ 1|` over hinge coefficients strictly inside their box.
    pub hinge_residual: f64,
    /// Number of interior coefficients checked for the two residuals above.
    pub interior: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub first: ProblemKkt,
    pub second: ProblemKkt,
}

impl KktReport {
    /// Complementarity within `rel_tol` times the band bound, for both problems.
    pub fn complementarity_ok(&self, hyper: &Hyperparams, rel_tol: f64) -> bool {
        self.first.complementarity <= rel_tol * hyper.c1
            && self.second.complementarity <= rel_tol * hyper.c3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub first: Option<SolveSummary>,
    pub second: Option<SolveSummary>,
    pub support_vectors: SupportVectors,
    pub kkt: KktReport,
}

/// A fitted model. Immutable; prediction only reads it.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    design: StackedDesign,
    hyper: Hyperparams,
    first: DualBlocks,
    second: DualBlocks,
    linear: Option<LinearParams>,
    diagnostics: Diagnostics,
    traces: Option<(AdmmTrace, AdmmTrace)>,
}

impl TrainedModel {
    /// Builds a model from given dual vectors (ordered as in the block
    /// layouts of the design) without solving anything.
    pub fn from_duals(
        design: StackedDesign,
        hyper: Hyperparams,
        first: DualBlocks,
        second: DualBlocks,
    ) -> Result<Self> {
        hyper.validate()?;
        let (p, q) = (design.num_pos(), design.num_neg());
        let shapes_ok = first.band_star.len() == p
            && first.band.len() == p
            && first.hinge.len() == q
            && second.band_star.len() == q
            && second.band.len() == q
            && second.hinge.len() == p;
        if !shapes_ok {
            return Err(Error::DimensionMismatch {
                expected: 2 * p + q,
                found: first.band_star.len() + first.band.len() + first.hinge.len(),
            });
        }
        let mut model = TrainedModel {
            design,
            hyper,
            first,
            second,
            linear: None,
            diagnostics: Diagnostics {
                first: None,
                second: None,
                support_vectors: SupportVectors {
                    first: SvCount { own: 0, other: 0 },
                    second: SvCount { own: 0, other: 0 },
                },
                kkt: KktReport {
                    first: ProblemKkt::default(),
                    second: ProblemKkt::default(),
                },
            },
            traces: None,
        };
        if model.hyper.kernel.is_linear() {
            model.linear = Some(model.compute_linear_params());
        }
        model.diagnostics.support_vectors = count_support_vectors(&model, DEFAULT_SV_TOL);
        model.diagnostics.kkt = kkt_report(&model, DEFAULT_SV_TOL);
        Ok(model)
    }

    pub fn design(&self) -> &StackedDesign {
        &self.design
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn first_duals(&self) -> &DualBlocks {
        &self.first
    }

    pub fn second_duals(&self) -> &DualBlocks {
        &self.second
    }

    pub fn linear_params(&self) -> Option<&LinearParams> {
        self.linear.as_ref()
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// ADMM traces of both solves; absent on models loaded from disk.
    pub fn traces(&self) -> Option<&(AdmmTrace, AdmmTrace)> {
        self.traces.as_ref()
    }

    pub fn task_ids(&self) -> &[TaskId] {
        &self.design.task_ids
    }

    pub fn feature_dim(&self) -> usize {
        self.design.feature_dim()
    }

    pub(crate) fn set_solve_summaries(&mut self, first: SolveSummary, second: SolveSummary) {
        self.diagnostics.first = Some(first);
        self.diagnostics.second = Some(second);
    }

    pub(crate) fn set_diagnostics(&mut self, diagnostics: Diagnostics) {
        self.diagnostics = diagnostics;
    }

    pub(crate) fn set_linear_params(&mut self, params: Option<LinearParams>) {
        self.linear = params;
    }

    fn task_index(&self, task: TaskId) -> Result<usize> {
        self.design.task_index(task).ok_or(Error::UnknownTask(task))
    }

    /// Bias-augmented rows `(x, 1)` of `m` restricted to `rows`.
    fn weighted_row_sum(
        m: &nalgebra::DMatrix<f64>,
        rows: Range<usize>,
        weights: &[f64],
        out: &mut [f64],
    ) {
        let d = m.ncols();
        for (i, &w) in rows.zip(weights) {
            for j in 0..d {
                out[j] += w * m[(i, j)];
            }
            out[d] += w;
        }
    }

    /// Per-task sums `z_t = Own_t' (a* - a) + s Other_t' b` over bias-augmented rows.
    fn task_sums(&self, problem: Problem) -> Vec<Vec<f64>> {
        let (own, other, own_slices, other_slices, duals, _, sign) = self.roles(problem);
        let d = self.design.feature_dim();
        let diff = duals.band_difference();
        let signed_hinge: Vec<f64> = duals.hinge.iter().map(|b| sign * b).collect();
        own_slices
            .iter()
            .zip(other_slices)
            .map(|(os, xs)| {
                let mut z = vec![0.0; d + 1];
                Self::weighted_row_sum(own, os.clone(), &diff.as_slice()[os.clone()], &mut z);
                Self::weighted_row_sum(other, xs.clone(), &signed_hinge[xs.clone()], &mut z);
                z
            })
            .collect()
    }

    /// `shared = (1/rho) sum_t z_t`, `task_t = T z_t`.
    fn hyperplane(&self, problem: Problem) -> (Vec<f64>, Vec<Vec<f64>>) {
        let rho = self.roles(problem).5;
        let big_t = self.design.num_tasks() as f64;
        let sums = self.task_sums(problem);
        let mut shared = vec![0.0; self.design.feature_dim() + 1];
        for z in &sums {
            for (acc, v) in shared.iter_mut().zip(z) {
                *acc += v;
            }
        }
        shared.iter_mut().for_each(|v| *v /= rho);
        let per_task = sums
            .iter()
            .map(|z| z.iter().map(|v| big_t * v).collect())
            .collect();
        (shared, per_task)
    }

    #[allow(clippy::type_complexity)]
    fn roles(
        &self,
        problem: Problem,
    ) -> (
        &nalgebra::DMatrix<f64>,
        &nalgebra::DMatrix<f64>,
        &[Range<usize>],
        &[Range<usize>],
        &DualBlocks,
        f64,
        f64,
    ) {
        let d = &self.design;
        match problem {
            Problem::First => (
                &d.pos,
                &d.neg,
                &d.pos_slices,
                &d.neg_slices,
                &self.first,
                self.hyper.rho1,
                -1.0,
            ),
            Problem::Second => (
                &d.neg,
                &d.pos,
                &d.neg_slices,
                &d.pos_slices,
                &self.second,
                self.hyper.rho2,
                1.0,
            ),
        }
    }

    fn compute_linear_params(&self) -> LinearParams {
        let (u, u_t) = self.hyperplane(Problem::First);
        let (v, v_t) = self.hyperplane(Problem::Second);
        LinearParams { u, u_t, v, v_t }
    }

    /// Kernel expansion of one hyperplane at `x` for task index `t`.
    fn expansion(&self, problem: Problem, x: &[f64], t: usize) -> f64 {
        let (own, other, own_slices, other_slices, duals, rho, sign) = self.roles(problem);
        let kernel = &self.hyper.kernel;
        let big_t = self.design.num_tasks() as f64;
        let k_own = augmented_row(kernel, x, own);
        let k_other = augmented_row(kernel, x, other);
        let diff = duals.band_difference();
        let global = k_own.dot(&diff) + sign * k_other.dot(&duals.hinge);
        let os = own_slices[t].clone();
        let xs = other_slices[t].clone();
        let local = k_own.rows_range(os.clone()).dot(&diff.rows_range(os))
            + sign
                * k_other
                    .rows_range(xs.clone())
                    .dot(&duals.hinge.rows_range(xs));
        global / rho + big_t * local
    }
}

impl Default for ProblemKkt {
    fn default() -> Self {
        ProblemKkt {
            complementarity: 0.0,
            box_violation: 0.0,
            stationarity_shared: None,
            stationarity_task: None,
            band_residual: 0.0,
            hinge_residual: 0.0,
            interior: 0,
        }
    }
}

/// Trains both hyperplane families. The two dual problems are solved on
/// separate threads. Non-convergence is recorded in the diagnostics.
pub fn fit(
    dataset: &MultiTaskDataset,
    hyper: &Hyperparams,
    settings: &AdmmSettings,
) -> Result<TrainedModel> {
    hyper.validate()?;
    settings.validate()?;
    let design = stack_by_class(dataset)?;

    let (first, second) = std::thread::scope(|scope| {
        let second = scope.spawn(|| -> Result<_> {
            let (qp, layout) = assemble_second(&design, hyper)?;
            Ok((admm::solve(&qp, settings)?, layout))
        });
        let first = (|| -> Result<_> {
            let (qp, layout) = assemble_first(&design, hyper)?;
            Ok((admm::solve(&qp, settings)?, layout))
        })();
        let second = second.join().expect("dual solver thread panicked");
        (first, second)
    });
    let (first_sol, first_layout) = first?;
    let (second_sol, second_layout) = second?;

    let mut model = TrainedModel::from_duals(
        design,
        *hyper,
        DualBlocks::from_vector(&first_sol.split_pi, &first_layout),
        DualBlocks::from_vector(&second_sol.split_pi, &second_layout),
    )?;
    model.set_solve_summaries(
        SolveSummary::from_solution(&first_sol),
        SolveSummary::from_solution(&second_sol),
    );
    model.traces = Some((first_sol.trace, second_sol.trace));
    Ok(model)
}

/// Explicit `(u, u_t, v, v_t)` of a linear-kernel model.
pub fn recover_parameters(model: &TrainedModel) -> Result<LinearParams> {
    if !model.hyper.kernel.is_linear() {
        return Err(Error::NotLinear);
    }
    Ok(model.compute_linear_params())
}

/// Values of the two task-`task` hyperplanes at `x`, by kernel expansion.
pub fn decision_values(model: &TrainedModel, x: &[f64], task: TaskId) -> Result<(f64, f64)> {
    if x.len() != model.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.feature_dim(),
            found: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("probe point"));
    }
    let t = model.task_index(task)?;
    Ok((
        model.expansion(Problem::First, x, t),
        model.expansion(Problem::Second, x, t),
    ))
}

/// Nearest-hyperplane rule on raw decision values; ties go to the positive class.
pub fn classify(g1: f64, g2: f64) -> Label {
    if g1.abs() <= g2.abs() {
        Label::Positive
    } else {
        Label::Negative
    }
}

pub fn predict(model: &TrainedModel, x: &[f64], task: TaskId) -> Result<Label> {
    let (g1, g2) = decision_values(model, x, task)?;
    Ok(classify(g1, g2))
}

/// Predicts every sample of `dataset`, returning labels in canonical order.
pub fn predict_dataset(model: &TrainedModel, dataset: &MultiTaskDataset) -> Result<Vec<Label>> {
    dataset
        .samples()
        .map(|(task, row, _)| predict(model, row.as_slice(), task))
        .collect()
}

fn count_problem(duals: &DualBlocks, own_tol: f64, other_tol: f64) -> SvCount {
    SvCount {
        own: duals
            .band_star
            .iter()
            .zip(duals.band.iter())
            .filter(|(s, a)| (*s - *a).abs() > own_tol)
            .count(),
        other: duals.hinge.iter().filter(|&&b| b > other_tol).count(),
    }
}

/// Support vector counts; a coefficient counts when it exceeds `rel_tol`
/// times the box bound of its block.
pub fn count_support_vectors(model: &TrainedModel, rel_tol: f64) -> SupportVectors {
    let h = &model.hyper;
    SupportVectors {
        first: count_problem(&model.first, rel_tol * h.c1, rel_tol * h.c2),
        second: count_problem(&model.second, rel_tol * h.c3, rel_tol * h.c4),
    }
}

fn box_violation(values: &DVector<f64>, upper: f64) -> f64 {
    values
        .iter()
        .map(|&v| (-v).max(v - upper).max(0.0))
        .fold(0.0, f64::max)
}

/// KKT diagnostics. `interior_tol` (relative to the box bound) decides which
/// coefficients count as strictly inside their box for the active-constraint
/// residuals.
pub fn kkt_report(model: &TrainedModel, interior_tol: f64) -> KktReport {
    KktReport {
        first: problem_kkt(model, Problem::First, interior_tol),
        second: problem_kkt(model, Problem::Second, interior_tol),
    }
}

fn problem_kkt(model: &TrainedModel, problem: Problem, interior_tol: f64) -> ProblemKkt {
    let h = &model.hyper;
    let (c_band, c_hinge) = match problem {
        Problem::First => (h.c1, h.c2),
        Problem::Second => (h.c3, h.c4),
    };
    let (own, other, own_slices, other_slices, duals, rho, sign) = model.roles(problem);

    let complementarity = duals
        .band_star
        .iter()
        .zip(duals.band.iter())
        .map(|(s, a)| s.min(*a))
        .fold(0.0, f64::max);
    let box_violation = box_violation(&duals.band_star, c_band)
        .max(box_violation(&duals.band, c_band))
        .max(box_violation(&duals.hinge, c_hinge));

    let (stationarity_shared, stationarity_task) = match &model.linear {
        Some(lp) => {
            let (w, wt) = match problem {
                Problem::First => (&lp.u, &lp.u_t),
                Problem::Second => (&lp.v, &lp.v_t),
            };
            // rho w = sum_t z_t and w_t = T z_t
            let sums = model.task_sums(problem);
            let big_t = model.design.num_tasks() as f64;
            let shared_res = (0..w.len())
                .map(|j| {
                    let total: f64 = sums.iter().map(|z| z[j]).sum();
                    (rho * w[j] - total).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            let task_res = wt
                .iter()
                .zip(&sums)
                .map(|(a, z)| {
                    a.iter()
                        .zip(z)
                        .map(|(x, y)| (x - big_t * y).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(0.0, f64::max);
            (Some(shared_res), Some(task_res))
        }
        None => (None, None),
    };

    // active-constraint residuals at interior coefficients
    let eps = h.epsilon;
    let hinge_target = sign; // -1 below for problem one, +1 above for problem two
    let mut band_residual: f64 = 0.0;
    let mut hinge_residual: f64 = 0.0;
    let mut interior = 0;
    let inside = |v: f64, c: f64| v > interior_tol * c && v < c - interior_tol * c;
    for (t, (os, xs)) in own_slices.iter().zip(other_slices).enumerate() {
        for i in os.clone() {
            let (s, a) = (duals.band_star[i], duals.band[i]);
            if !(inside(s, c_band) || inside(a, c_band)) {
                continue;
            }
            let x: Vec<f64> = own.row(i).iter().copied().collect();
            let f = model.expansion(problem, &x, t);
            if inside(a, c_band) {
                band_residual = band_residual.max((f - eps).abs());
                interior += 1;
            }
            if inside(s, c_band) {
                band_residual = band_residual.max((f + eps).abs());
                interior += 1;
            }
        }
        for j in xs.clone() {
            if !inside(duals.hinge[j], c_hinge) {
                continue;
            }
            let x: Vec<f64> = other.row(j).iter().copied().collect();
            let f = model.expansion(problem, &x, t);
            hinge_residual = hinge_residual.max((f - hinge_target).abs());
            interior += 1;
        }
    }

    ProblemKkt {
        complementarity,
        box_violation,
        stationarity_shared,
        stationarity_task,
        band_residual,
        hinge_residual,
        interior,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_blobs;
    use crate::refqp::projected_gradient_solve;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs() -> MultiTaskDataset {
        synth_blobs(3, 15, 2, 0.3, 0.5, 11).unwrap()
    }

    fn tight() -> AdmmSettings {
        AdmmSettings {
            delta_abs: 1e-10,
            delta_rel: 1e-10,
            max_iter: 200_000,
            ..AdmmSettings::default()
        }
    }

    /// Model whose duals come from the projected-gradient oracle.
    fn oracle_model(ds: &MultiTaskDataset, hyper: &Hyperparams) -> TrainedModel {
        let design = stack_by_class(ds).unwrap();
        let (q1, l1) = assemble_first(&design, hyper).unwrap();
        let (q2, l2) = assemble_second(&design, hyper).unwrap();
        let x1 = projected_gradient_solve(&q1, 1e-11, 2_000_000).unwrap();
        let x2 = projected_gradient_solve(&q2, 1e-11, 2_000_000).unwrap();
        TrainedModel::from_duals(
            design,
            *hyper,
            DualBlocks::from_vector(&x1, &l1),
            DualBlocks::from_vector(&x2, &l2),
        )
        .unwrap()
    }

    fn dot_aug(w: &[f64], x: &[f64]) -> f64 {
        x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + w[x.len()]
    }

    fn norm2(w: &[f64]) -> f64 {
        w.iter().map(|v| v * v).sum()
    }

    /// Primal objective with the slacks at their smallest feasible values.
    fn primal_value(model: &TrainedModel, problem: Problem) -> f64 {
        let lp = recover_parameters(model).unwrap();
        let h = model.hyper();
        let d = model.design();
        let big_t = d.num_tasks() as f64;
        let (w, wt, rho, c_band, c_hinge, own, other, os, xs, target) = match problem {
            Problem::First => (
                &lp.u,
                &lp.u_t,
                h.rho1,
                h.c1,
                h.c2,
                &d.pos,
                &d.neg,
                &d.pos_slices,
                &d.neg_slices,
                -1.0,
            ),
            Problem::Second => (
                &lp.v,
                &lp.v_t,
                h.rho2,
                h.c3,
                h.c4,
                &d.neg,
                &d.pos,
                &d.neg_slices,
                &d.pos_slices,
                1.0,
            ),
        };
        let mut value = 0.5 * rho * norm2(w);
        for t in 0..d.num_tasks() {
            value += norm2(&wt[t]) / (2.0 * big_t);
            let plane: Vec<f64> = w.iter().zip(&wt[t]).map(|(a, b)| a + b).collect();
            for i in os[t].clone() {
                let x: Vec<f64> = own.row(i).iter().copied().collect();
                let f = dot_aug(&plane, &x);
                value += c_band * (f.abs() - h.epsilon).max(0.0);
            }
            for j in xs[t].clone() {
                let x: Vec<f64> = other.row(j).iter().copied().collect();
                let f = dot_aug(&plane, &x);
                // problem one wants f <= -1, problem two wants f >= 1
                value += c_hinge * (1.0 - target * f).max(0.0);
            }
        }
        value
    }

    #[test]
    fn strong_duality_holds_for_both_problems() {
        let ds = blobs();
        let hyper = Hyperparams {
            rho1: 2.0,
            rho2: 0.5,
            c1: 1.0,
            c2: 2.0,
            c3: 0.5,
            c4: 1.5,
            epsilon: 0.2,
            kernel: KernelSpec::linear(),
        };
        let model = oracle_model(&ds, &hyper);
        let design = model.design().clone();
        for problem in [Problem::First, Problem::Second] {
            let (qp, layout) = match problem {
                Problem::First => assemble_first(&design, &hyper).unwrap(),
                Problem::Second => assemble_second(&design, &hyper).unwrap(),
            };
            let duals = match problem {
                Problem::First => model.first_duals(),
                Problem::Second => model.second_duals(),
            };
            let x = duals.to_vector();
            assert_eq!(x.len(), layout.dim());
            let dual = -admm::objective(&qp, &x);
            let primal = primal_value(&model, problem);
            assert_relative_eq!(primal, dual, max_relative = 1e-6);
        }
    }

    #[test]
    fn explicit_and_kernel_decision_values_agree() {
        let ds = blobs();
        let model = fit(&ds, &Hyperparams::default(), &AdmmSettings::default()).unwrap();
        let lp = model.linear_params().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let task = rng.random_range(1..=3);
            let (g1, g2) = decision_values(&model, &x, task).unwrap();
            let (e1, e2) = lp.decision_values(&x, model.design().task_index(task).unwrap());
            assert!((g1 - e1).abs() <= 1e-8 && (g2 - e2).abs() <= 1e-8);
        }
    }

    #[test]
    fn interior_coefficients_sit_on_their_constraints() {
        let ds = blobs();
        let hyper = Hyperparams {
            epsilon: 0.2,
            ..Hyperparams::default()
        };
        let model = oracle_model(&ds, &hyper);
        let report = kkt_report(&model, 1e-4);
        for p in [report.first, report.second] {
            assert!(p.interior > 0);
            assert!(p.band_residual < 1e-6, "{p:?}");
            assert!(p.hinge_residual < 1e-6, "{p:?}");
            assert!(p.stationarity_shared.unwrap() <= 1e-12);
            assert!(p.stationarity_task.unwrap() <= 1e-12);
            assert_eq!(p.box_violation, 0.0);
        }
    }

    #[test]
    fn fit_separates_blobs_and_is_deterministic() {
        let ds = synth_blobs(3, 40, 2, 0.3, 0.5, 7).unwrap();
        let a = fit(&ds, &Hyperparams::default(), &AdmmSettings::default()).unwrap();
        let b = fit(&ds, &Hyperparams::default(), &AdmmSettings::default()).unwrap();
        assert_eq!(a.first_duals(), b.first_duals());
        assert_eq!(a.second_duals(), b.second_duals());
        let pred = predict_dataset(&a, &ds).unwrap();
        let hits = ds
            .samples()
            .zip(&pred)
            .filter(|((_, _, y), p)| y == *p)
            .count();
        assert!(hits as f64 / pred.len() as f64 >= 0.95);
        let kkt = &a.diagnostics().kkt;
        assert_eq!(kkt.first.box_violation, 0.0);
        assert_eq!(kkt.second.box_violation, 0.0);
    }

    #[test]
    fn label_swap_exchanges_the_problems() {
        let ds = blobs();
        let hyper = Hyperparams {
            rho1: 2.0,
            c1: 0.5,
            c4: 2.0,
            epsilon: 0.2,
            ..Hyperparams::default()
        };
        let flipped = MultiTaskDataset::new(
            ds.tasks()
                .iter()
                .map(|t| {
                    let y = t
                        .y()
                        .iter()
                        .map(|l| match l {
                            Label::Positive => Label::Negative,
                            Label::Negative => Label::Positive,
                        })
                        .collect();
                    crate::data::TaskData::new(t.task_id(), t.x().clone(), y).unwrap()
                })
                .collect(),
        )
        .unwrap();
        let a = fit(&ds, &hyper, &tight()).unwrap();
        let b = fit(&flipped, &hyper.swapped(), &tight()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let task = rng.random_range(1..=3);
            let (g1, g2) = decision_values(&a, &x, task).unwrap();
            let (h1, h2) = decision_values(&b, &x, task).unwrap();
            // hyperplane roles swap; the reflected dual flips the sign of f
            assert!((g1 + h2).abs() < 1e-6 && (g2 + h1).abs() < 1e-6);
            if (g1.abs() - g2.abs()).abs() > 1e-6 {
                let pa = predict(&a, &x, task).unwrap();
                let pb = predict(&b, &x, task).unwrap();
                assert_ne!(pa, pb);
            }
        }
    }

    #[test]
    fn huge_coupling_decouples_tasks() {
        let ds = synth_blobs(3, 40, 2, 0.3, 0.5, 7).unwrap();
        let hyper = Hyperparams {
            rho1: 1e6,
            rho2: 1e6,
            ..Hyperparams::default()
        };
        let model = fit(&ds, &hyper, &AdmmSettings::default()).unwrap();
        let lp = model.linear_params().unwrap();
        assert!(norm2(&lp.u).sqrt() <= 1e-3);
        assert!(norm2(&lp.v).sqrt() <= 1e-3);
    }

    #[test]
    fn zero_duals_give_zero_everything() {
        let design = stack_by_class(&blobs()).unwrap();
        let (p, q) = (design.num_pos(), design.num_neg());
        let model = TrainedModel::from_duals(
            design,
            Hyperparams::default(),
            DualBlocks::zeros(p, q),
            DualBlocks::zeros(q, p),
        )
        .unwrap();
        assert_eq!(
            decision_values(&model, &[0.4, -1.0], 2).unwrap(),
            (0.0, 0.0)
        );
        let lp = recover_parameters(&model).unwrap();
        assert!(lp.u.iter().chain(lp.v.iter()).all(|&v| v == 0.0));
        let sv = count_support_vectors(&model, DEFAULT_SV_TOL);
        assert_eq!(sv.first, SvCount { own: 0, other: 0 });
        assert_eq!(
            kkt_report(&model, DEFAULT_KKT_TOL).first.complementarity,
            0.0
        );
    }

    #[test]
    fn coupling_scales_shared_part_only() {
        let ds = blobs();
        let design = stack_by_class(&ds).unwrap();
        let (p, q) = (design.num_pos(), design.num_neg());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut random = |n: usize| DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0));
        let first = DualBlocks {
            band_star: random(p),
            band: random(p),
            hinge: random(q),
        };
        let second = DualBlocks::zeros(q, p);
        let base = Hyperparams::default();
        let scaled = Hyperparams { rho1: 4.0, ..base };
        let a =
            TrainedModel::from_duals(design.clone(), base, first.clone(), second.clone()).unwrap();
        let b = TrainedModel::from_duals(design, scaled, first, second).unwrap();
        let (la, lb) = (a.linear_params().unwrap(), b.linear_params().unwrap());
        for (x, y) in la.u.iter().zip(&lb.u) {
            assert_relative_eq!(*x, 4.0 * y, max_relative = 1e-12);
        }
        assert_eq!(la.u_t, lb.u_t);
    }

    #[test]
    fn support_vector_rules() {
        let design = stack_by_class(&blobs()).unwrap();
        let (p, q) = (design.num_pos(), design.num_neg());
        let hyper = Hyperparams {
            c2: 2.0,
            ..Hyperparams::default()
        };
        let mut first = DualBlocks::zeros(p, q);
        first.hinge.fill(2.0);
        first.band_star[0] = 0.3;
        first.band[1] = 0.4;
        let model = TrainedModel::from_duals(design, hyper, first.clone(), DualBlocks::zeros(q, p))
            .unwrap();
        let sv = count_support_vectors(&model, DEFAULT_SV_TOL);
        assert_eq!(sv.first, SvCount { own: 2, other: q });
        let by_max = first
            .band_star
            .iter()
            .zip(first.band.iter())
            .filter(|(s, a)| s.max(**a) > DEFAULT_SV_TOL)
            .count();
        assert_eq!(by_max, sv.first.own);
    }

    #[test]
    fn prediction_rule_and_errors() {
        assert_eq!(classify(0.1, 0.5), Label::Positive);
        assert_eq!(classify(0.5, 0.1), Label::Negative);
        assert_eq!(classify(0.3, -0.3), Label::Positive);
        let ds = blobs();
        let rbf = Hyperparams {
            kernel: KernelSpec::rbf(1.0).unwrap(),
            ..Hyperparams::default()
        };
        let model = fit(&ds, &rbf, &AdmmSettings::default()).unwrap();
        assert!(model.linear_params().is_none());
        assert!(matches!(recover_parameters(&model), Err(Error::NotLinear)));
        assert!(matches!(
            predict(&model, &[0.0, 0.0], 9),
            Err(Error::UnknownTask(9))
        ));
        assert!(predict(&model, &[0.0], 1).is_err());
    }

    #[test]
    fn hyperparam_validation() {
        assert!(Hyperparams::default().validate().is_ok());
        let bad = Hyperparams {
            epsilon: -0.1,
            ..Hyperparams::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidParameter(_))));
        let bad = Hyperparams {
            c3: 0.0,
            ..Hyperparams::default()
        };
        assert!(bad.validate().is_err());
    }
}
