//! Assembly of the two box-constrained dual problems.
//!
//! Both duals share one shape: a coordinate vector `(a_star; a; b)` where the
//! first two segments belong to the class the hyperplane should pass through
//! (the epsilon band) and the last segment to the class it should be pushed
//! away from (the hinge). With `M_oo`, `M_ox`, `M_xx` the task-coupled kernel
//! matrices of own/other rows,
//!
//! ```text
//!     [  M_oo   -M_oo   s M_ox ]
//! L = [ -M_oo    M_oo  -s M_ox ]      k = (eps 1; eps 1; -1)
//!     [ s M_xo  -s M_xo   M_xx ]
//! ```
//!
//! where `s = -1` for the positive-class problem (other class pushed below -1)
//! and `s = +1` for the negative-class problem (other class pushed above +1).

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::data::StackedDesign;
use crate::error::{Error, Result};
use crate::kernel::{augmented_gram, KernelSpec};
use crate::model::Hyperparams;

/// `min 0.5 x'Lx + k'x  s.t. 0 <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxQP {
    lambda: DMatrix<f64>,
    kappa: DVector<f64>,
    upper: DVector<f64>,
}

impl BoxQP {
    /// Validates shapes and bounds, and symmetrizes the quadratic form.
    pub fn new(lambda: DMatrix<f64>, kappa: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        let n = kappa.len();
        if lambda.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: lambda.nrows(),
            });
        }
        if upper.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: upper.len(),
            });
        }
        if lambda
            .iter()
            .chain(kappa.iter())
            .chain(upper.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("quadratic program"));
        }
        if upper.iter().any(|&c| c < 0.0) {
            return Err(Error::InvalidParameter(
                "box upper bounds must be non-negative".into(),
            ));
        }
        let mut lambda = lambda;
        symmetrize(&mut lambda);
        Ok(BoxQP {
            lambda,
            kappa,
            upper,
        })
    }

    pub fn dim(&self) -> usize {
        self.kappa.len()
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn kappa(&self) -> &DVector<f64> {
        &self.kappa
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    /// Componentwise projection onto `[0, upper]`.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        x.zip_map(&self.upper, |v, c| v.clamp(0.0, c))
    }

    /// Reorders coordinates: entry `i` of the result is entry `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> BoxQP {
        let n = self.dim();
        BoxQP {
            lambda: DMatrix::from_fn(n, n, |i, j| self.lambda[(perm[i], perm[j])]),
            kappa: DVector::from_fn(n, |i, _| self.kappa[perm[i]]),
            upper: DVector::from_fn(n, |i, _| self.upper[perm[i]]),
        }
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    /// Positive-class hyperplane: `(alpha+*, alpha+, beta-)`.
    First,
    /// Negative-class hyperplane: `(alpha-*, alpha-, beta+)`.
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    BandStar,
    Band,
    Hinge,
}

/// Interpretation of one dual coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coordinate {
    pub segment: Segment,
    /// Task index (position in the design's task order, not the task id).
    pub task: usize,
    /// Row within the task's slice of its class.
    pub sample: usize,
}

/// Coordinate layout of a dual vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    pub problem: Problem,
    /// Per-task slices of the band class rows (`pos` for the first problem).
    pub own_slices: Vec<Range<usize>>,
    /// Per-task slices of the hinge class rows.
    pub other_slices: Vec<Range<usize>>,
}

impl BlockLayout {
    pub fn for_design(problem: Problem, design: &StackedDesign) -> Self {
        let (own, other) = match problem {
            Problem::First => (&design.pos_slices, &design.neg_slices),
            Problem::Second => (&design.neg_slices, &design.pos_slices),
        };
        BlockLayout {
            problem,
            own_slices: own.clone(),
            other_slices: other.clone(),
        }
    }

    pub fn own(&self) -> usize {
        self.own_slices.last().map_or(0, |r| r.end)
    }

    pub fn other(&self) -> usize {
        self.other_slices.last().map_or(0, |r| r.end)
    }

    pub fn dim(&self) -> usize {
        2 * self.own() + self.other()
    }

    pub fn segment(&self, segment: Segment) -> Range<usize> {
        let own = self.own();
        match segment {
            Segment::BandStar => 0..own,
            Segment::Band => own..2 * own,
            Segment::Hinge => 2 * own..2 * own + self.other(),
        }
    }

    pub fn locate(&self, index: usize) -> Option<Coordinate> {
        let own = self.own();
        let (segment, offset, slices) = if index < own {
            (Segment::BandStar, index, &self.own_slices)
        } else if index < 2 * own {
            (Segment::Band, index - own, &self.own_slices)
        } else if index < self.dim() {
            (Segment::Hinge, index - 2 * own, &self.other_slices)
        } else {
            return None;
        };
        let task = slices.iter().position(|r| r.contains(&offset))?;
        Some(Coordinate {
            segment,
            task,
            sample: offset - slices[task].start,
        })
    }

    pub fn index_of(&self, c: Coordinate) -> Option<usize> {
        let slices = match c.segment {
            Segment::Hinge => &self.other_slices,
            _ => &self.own_slices,
        };
        let r = slices.get(c.task)?;
        if c.sample >= r.len() {
            return None;
        }
        Some(self.segment(c.segment).start + r.start + c.sample)
    }
}

/// Task-coupled kernel matrix `(1/rho) K^(X, Z) + T blkdiag(K^(X_t, Z_t))`,
/// where `K^` is the augmented kernel and the task blocks are the (possibly
/// rectangular) diagonal blocks given by the slices.
pub fn build_m(
    spec: &KernelSpec,
    rho: f64,
    x: &DMatrix<f64>,
    x_slices: &[Range<usize>],
    z: &DMatrix<f64>,
    z_slices: &[Range<usize>],
) -> Result<DMatrix<f64>> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rho must be positive, got {rho}"
        )));
    }
    check_slices(x_slices, x.nrows())?;
    check_slices(z_slices, z.nrows())?;
    if x_slices.len() != z_slices.len() {
        return Err(Error::DimensionMismatch {
            expected: x_slices.len(),
            found: z_slices.len(),
        });
    }
    let t = x_slices.len() as f64;
    let k = augmented_gram(spec, x, z)?;
    let mut m = &k / rho;
    for (xs, zs) in x_slices.iter().zip(z_slices) {
        for i in xs.clone() {
            for j in zs.clone() {
                m[(i, j)] += t * k[(i, j)];
            }
        }
    }
    Ok(m)
}

fn check_slices(slices: &[Range<usize>], rows: usize) -> Result<()> {
    let mut next = 0;
    for r in slices {
        if r.start != next || r.end < r.start {
            return Err(Error::InvalidParameter(format!(
                "task slices must tile the rows contiguously; found {r:?} at offset {next}"
            )));
        }
        next = r.end;
    }
    if next != rows {
        return Err(Error::DimensionMismatch {
            expected: rows,
            found: next,
        });
    }
    Ok(())
}

struct Roles<'a> {
    own: &'a DMatrix<f64>,
    own_slices: &'a [Range<usize>],
    other: &'a DMatrix<f64>,
    other_slices: &'a [Range<usize>],
    rho: f64,
    c_band: f64,
    c_hinge: f64,
    cross_sign: f64,
}

fn assemble(roles: Roles<'_>, kernel: &KernelSpec, epsilon: f64) -> Result<BoxQP> {
    let m_oo = build_m(
        kernel,
        roles.rho,
        roles.own,
        roles.own_slices,
        roles.own,
        roles.own_slices,
    )?;
    let m_ox = build_m(
        kernel,
        roles.rho,
        roles.own,
        roles.own_slices,
        roles.other,
        roles.other_slices,
    )?;
    let m_xx = build_m(
        kernel,
        roles.rho,
        roles.other,
        roles.other_slices,
        roles.other,
        roles.other_slices,
    )?;
    let own = roles.own.nrows();
    let other = roles.other.nrows();
    let n = 2 * own + other;
    let s = roles.cross_sign;

    let mut lambda = DMatrix::zeros(n, n);
    lambda.view_mut((0, 0), (own, own)).copy_from(&m_oo);
    lambda.view_mut((0, own), (own, own)).copy_from(&(-&m_oo));
    lambda.view_mut((own, 0), (own, own)).copy_from(&(-&m_oo));
    lambda.view_mut((own, own), (own, own)).copy_from(&m_oo);
    lambda
        .view_mut((0, 2 * own), (own, other))
        .copy_from(&(&m_ox * s));
    lambda
        .view_mut((own, 2 * own), (own, other))
        .copy_from(&(&m_ox * -s));
    let m_xo = m_ox.transpose();
    lambda
        .view_mut((2 * own, 0), (other, own))
        .copy_from(&(&m_xo * s));
    lambda
        .view_mut((2 * own, own), (other, own))
        .copy_from(&(&m_xo * -s));
    lambda
        .view_mut((2 * own, 2 * own), (other, other))
        .copy_from(&m_xx);

    let mut kappa = DVector::from_element(n, epsilon);
    kappa.rows_mut(2 * own, other).fill(-1.0);
    let mut upper = DVector::from_element(n, roles.c_band);
    upper.rows_mut(2 * own, other).fill(roles.c_hinge);
    BoxQP::new(lambda, kappa, upper)
}

/// Dual of the positive-class problem, coordinates `(alpha+*; alpha+; beta-)`.
pub fn assemble_first(design: &StackedDesign, hyper: &Hyperparams) -> Result<(BoxQP, BlockLayout)> {
    hyper.validate()?;
    let qp = assemble(
        Roles {
            own: &design.pos,
            own_slices: &design.pos_slices,
            other: &design.neg,
            other_slices: &design.neg_slices,
            rho: hyper.rho1,
            c_band: hyper.c1,
            c_hinge: hyper.c2,
            cross_sign: -1.0,
        },
        &hyper.kernel,
        hyper.epsilon,
    )?;
    Ok((qp, BlockLayout::for_design(Problem::First, design)))
}

/// Dual of the negative-class problem, coordinates `(alpha-*; alpha-; beta+)`.
pub fn assemble_second(
    design: &StackedDesign,
    hyper: &Hyperparams,
) -> Result<(BoxQP, BlockLayout)> {
    hyper.validate()?;
    let qp = assemble(
        Roles {
            own: &design.neg,
            own_slices: &design.neg_slices,
            other: &design.pos,
            other_slices: &design.pos_slices,
            rho: hyper.rho2,
            c_band: hyper.c3,
            c_hinge: hyper.c4,
            cross_sign: 1.0,
        },
        &hyper.kernel,
        hyper.epsilon,
    )?;
    Ok((qp, BlockLayout::for_design(Problem::Second, design)))
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init)]
mod tests {
    use super::*;
    use crate::data::stack_by_class;
    use crate::data::synth_blobs;
    use crate::kernel::kernel_eval;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn design(seed: u64, tasks: usize, n: usize) -> StackedDesign {
        stack_by_class(&synth_blobs(tasks, n, 3, 0.4, 0.6, seed).unwrap()).unwrap()
    }

    fn hyper() -> Hyperparams {
        Hyperparams {
            rho1: 0.7,
            rho2: 1.9,
            c1: 0.5,
            c2: 2.0,
            c3: 1.5,
            c4: 0.25,
            epsilon: 0.2,
            kernel: KernelSpec::rbf(1.3).unwrap(),
        }
    }

    fn quad(qp: &BoxQP, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(qp.lambda() * x)) + qp.kappa().dot(x)
    }

    fn random_point(rng: &mut ChaCha8Rng, upper: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(upper.len(), |i, _| rng.random_range(0.0..=upper[i]))
    }

    #[test]
    fn single_task_m_is_scaled_gram() {
        let d = design(1, 1, 4);
        let spec = KernelSpec::rbf(0.9).unwrap();
        let rho = 0.3;
        let m = build_m(&spec, rho, &d.pos, &d.pos_slices, &d.neg, &d.neg_slices).unwrap();
        let k = augmented_gram(&spec, &d.pos, &d.neg).unwrap();
        assert!((m - k * (1.0 / rho + 1.0)).amax() < 1e-12);
    }

    #[test]
    fn zero_rows_two_tasks() {
        let x = DMatrix::zeros(4, 2);
        let slices = vec![0..2, 2..4];
        let m = build_m(&KernelSpec::linear(), 1.0, &x, &slices, &x, &slices).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i < 2) == (j < 2) { 3.0 } else { 1.0 };
                assert_eq!(m[(i, j)], expected);
            }
        }
    }

    #[test]
    fn m_matches_naive_loop() {
        let d = design(2, 2, 5);
        let spec = KernelSpec::polynomial(2).unwrap();
        let rho = 1.7;
        let m = build_m(&spec, rho, &d.pos, &d.pos_slices, &d.neg, &d.neg_slices).unwrap();
        let task_of =
            |slices: &[Range<usize>], i: usize| slices.iter().position(|r| r.contains(&i));
        for i in 0..d.num_pos() {
            for j in 0..d.num_neg() {
                let xi: Vec<f64> = d.pos.row(i).iter().copied().collect();
                let zj: Vec<f64> = d.neg.row(j).iter().copied().collect();
                let kh = kernel_eval(&spec, &xi, &zj).unwrap() + 1.0;
                let mut expected = kh / rho;
                if task_of(&d.pos_slices, i) == task_of(&d.neg_slices, j) {
                    expected += 2.0 * kh;
                }
                assert!((m[(i, j)] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn m_rejects_bad_inputs() {
        let x = DMatrix::zeros(4, 2);
        let good = vec![0..2, 2..4];
        assert!(build_m(&KernelSpec::linear(), 0.0, &x, &good, &x, &good).is_err());
        let gap = vec![0..1, 2..4];
        assert!(build_m(&KernelSpec::linear(), 1.0, &x, &gap, &x, &good).is_err());
        let short = vec![0..3];
        assert!(build_m(&KernelSpec::linear(), 1.0, &x, &short, &x, &short).is_err());
        let one = vec![0..4];
        assert!(build_m(&KernelSpec::linear(), 1.0, &x, &one, &x, &good).is_err());
    }

    #[test]
    fn layout_dimensions() {
        let x_pos = DMatrix::zeros(3, 2);
        let x_neg = DMatrix::from_element(2, 2, 1.0);
        let d = StackedDesign {
            task_ids: vec![1],
            pos: x_pos,
            neg: x_neg,
            pos_slices: vec![0..3],
            neg_slices: vec![0..2],
        };
        let (qp, layout) = assemble_first(&d, &hyper()).unwrap();
        assert_eq!(qp.dim(), 8);
        assert_eq!(layout.segment(Segment::BandStar), 0..3);
        assert_eq!(layout.segment(Segment::Band), 3..6);
        assert_eq!(layout.segment(Segment::Hinge), 6..8);
        let (qp2, layout2) = assemble_second(&d, &hyper()).unwrap();
        assert_eq!((qp2.dim(), layout2.dim()), (7, 7));
    }

    #[test]
    fn layout_index_round_trip() {
        let d = design(3, 3, 4);
        for problem in [Problem::First, Problem::Second] {
            let layout = BlockLayout::for_design(problem, &d);
            for i in 0..layout.dim() {
                let c = layout.locate(i).unwrap();
                assert_eq!(layout.index_of(c), Some(i));
            }
            assert!(layout.locate(layout.dim()).is_none());
        }
    }

    #[test]
    fn first_objective_matches_direct_formula() {
        let d = design(4, 2, 5);
        let h = hyper();
        let (qp, layout) = assemble_first(&d, &h).unwrap();
        let m_aa = build_m(
            &h.kernel,
            h.rho1,
            &d.pos,
            &d.pos_slices,
            &d.pos,
            &d.pos_slices,
        )
        .unwrap();
        let m_ab = build_m(
            &h.kernel,
            h.rho1,
            &d.pos,
            &d.pos_slices,
            &d.neg,
            &d.neg_slices,
        )
        .unwrap();
        let m_bb = build_m(
            &h.kernel,
            h.rho1,
            &d.neg,
            &d.neg_slices,
            &d.neg,
            &d.neg_slices,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let x = random_point(&mut rng, qp.upper());
            let a_star = x.rows_range(layout.segment(Segment::BandStar)).into_owned();
            let a = x.rows_range(layout.segment(Segment::Band)).into_owned();
            let b = x.rows_range(layout.segment(Segment::Hinge)).into_owned();
            let diff = &a_star - &a;
            let direct = 0.5 * diff.dot(&(&m_aa * &diff)) - diff.dot(&(&m_ab * &b))
                + 0.5 * b.dot(&(&m_bb * &b))
                + h.epsilon * (a_star.sum() + a.sum())
                - b.sum();
            let got = quad(&qp, &x);
            assert!((got - direct).abs() <= 1e-10 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn second_objective_matches_direct_formula() {
        let d = design(6, 3, 4);
        let h = hyper();
        let (qp, layout) = assemble_second(&d, &h).unwrap();
        let m_bb = build_m(
            &h.kernel,
            h.rho2,
            &d.neg,
            &d.neg_slices,
            &d.neg,
            &d.neg_slices,
        )
        .unwrap();
        let m_ba = build_m(
            &h.kernel,
            h.rho2,
            &d.neg,
            &d.neg_slices,
            &d.pos,
            &d.pos_slices,
        )
        .unwrap();
        let m_aa = build_m(
            &h.kernel,
            h.rho2,
            &d.pos,
            &d.pos_slices,
            &d.pos,
            &d.pos_slices,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let x = random_point(&mut rng, qp.upper());
            let a_star = x.rows_range(layout.segment(Segment::BandStar)).into_owned();
            let a = x.rows_range(layout.segment(Segment::Band)).into_owned();
            let b = x.rows_range(layout.segment(Segment::Hinge)).into_owned();
            let diff = &a_star - &a;
            // the positive rows sit on the +1 side, so the cross term enters with +
            let direct = 0.5 * diff.dot(&(&m_bb * &diff))
                + diff.dot(&(&m_ba * &b))
                + 0.5 * b.dot(&(&m_aa * &b))
                + h.epsilon * (a_star.sum() + a.sum())
                - b.sum();
            let got = quad(&qp, &x);
            assert!((got - direct).abs() <= 1e-10 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn bounds_and_linear_terms() {
        let d = design(8, 2, 3);
        let h = hyper();
        let (qp, layout) = assemble_first(&d, &h).unwrap();
        for i in layout.segment(Segment::Hinge) {
            assert_eq!((qp.kappa()[i], qp.upper()[i]), (-1.0, h.c2));
        }
        for i in 0..layout.segment(Segment::Hinge).start {
            assert_eq!((qp.kappa()[i], qp.upper()[i]), (h.epsilon, h.c1));
        }
        let (qp, layout) = assemble_second(&d, &h).unwrap();
        for i in layout.segment(Segment::Hinge) {
            assert_eq!(qp.upper()[i], h.c4);
        }
        assert_eq!(qp.upper()[0], h.c3);
    }

    #[test]
    fn swapping_roles_maps_first_onto_second() {
        let d = design(9, 2, 4);
        let h = hyper();
        let swapped_h = Hyperparams {
            rho1: h.rho2,
            rho2: h.rho1,
            c1: h.c3,
            c2: h.c4,
            c3: h.c1,
            c4: h.c2,
            ..h
        };
        let (first, _) = assemble_first(&d.swapped(), &swapped_h).unwrap();
        let (second, layout) = assemble_second(&d, &h).unwrap();
        // the band pair is exchanged: the second problem's upper band is the
        // first problem's lower band once the hyperplane is reflected
        let own = layout.own();
        let perm: Vec<usize> = (0..own)
            .map(|i| i + own)
            .chain(0..own)
            .chain(2 * own..layout.dim())
            .collect();
        let permuted = second.permuted(&perm);
        assert!((permuted.lambda() - first.lambda()).amax() < 1e-12);
        assert_eq!(permuted.kappa(), first.kappa());
        assert_eq!(permuted.upper(), first.upper());
    }

    #[test]
    fn lambda_symmetric_and_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for seed in 0..5 {
            let d = design(seed, 2, 4);
            let mut h = hyper();
            h.rho1 = rng.random_range(0.2..4.0);
            h.rho2 = rng.random_range(0.2..4.0);
            for (qp, _) in [
                assemble_first(&d, &h).unwrap(),
                assemble_second(&d, &h).unwrap(),
            ] {
                assert_eq!(qp.lambda(), &qp.lambda().transpose());
                let eig = SymmetricEigen::new(qp.lambda().clone()).eigenvalues;
                assert!(eig.min() >= -1e-9 * eig.max());
            }
        }
    }

    #[test]
    fn boxqp_validation() {
        let l = DMatrix::identity(2, 2);
        let k = DVector::zeros(2);
        assert!(BoxQP::new(l.clone(), k.clone(), DVector::from_vec(vec![1.0, -1.0])).is_err());
        assert!(BoxQP::new(l.clone(), DVector::zeros(3), DVector::zeros(3)).is_err());
        let mut bad = l.clone();
        bad[(0, 1)] = f64::INFINITY;
        assert!(BoxQP::new(bad, k.clone(), DVector::zeros(2)).is_err());
        let mut skew = l;
        skew[(0, 1)] = 1.0;
        let qp = BoxQP::new(skew, k, DVector::zeros(2)).unwrap();
        assert_eq!(qp.lambda()[(0, 1)], 0.5);
        assert_eq!(qp.lambda()[(1, 0)], 0.5);
    }
}
