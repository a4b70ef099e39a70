//! Affine normalization at a free-boundary point.
//!
//! With `S = A(x0)^{1/2}` and `L = f(x0)^{-1/2} S`, the function
//! `u_L(x) = u(x0 + L x)` solves `div(C grad u_L) = f_L / f(x0)` off its
//! contact set, where `C(x) = S^{-1} A(x0 + L x) S^{-1}` and
//! `f_L(x) = f(x0 + L x)`. Both `C(0) = Id` and `f_L(0) / f(x0) = 1`.
//! Expanding the divergence gives
//!
//! ```text
//! lap u_L = 1 + r(x),
//! r = (f_L / f(x0)) chi - 1 - (c_ij - delta_ij) d_ij u_L - div(C^i) d_i u_L
//! ```
//!
//! which [`residual_field`] evaluates term by term.

use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, Vector2};
use rayon::prelude::*;

use crate::field::{Evaluator, Jet, MatrixField, Point};
use crate::problem::{Coefficients, ObstacleProblem};
use crate::solve::DiscreteSolution;
use crate::{Error, Result};

/// Square root of a symmetric positive definite 2x2 matrix in closed form:
/// `sqrt(M) = (M + sqrt(det M) Id) / sqrt(tr M + 2 sqrt(det M))`.
pub fn spd_sqrt(m: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let scale = m.abs().max().max(f64::MIN_POSITIVE);
    if (m[(0, 1)] - m[(1, 0)]).abs() > 1e-12 * scale {
        return Err(Error::NotSpd(format!("not symmetric: {m:?}")));
    }
    let det = m.determinant();
    let tr = m.trace();
    if !(det > 0.0 && tr > 0.0) {
        return Err(Error::NotSpd(format!("eigenvalues not positive (trace {tr}, determinant {det})")));
    }
    let s = det.sqrt();
    Ok((m + Matrix2::identity() * s) / (tr + 2.0 * s).sqrt())
}

/// Square root of a symmetric positive definite 3x3 matrix through its
/// eigendecomposition.
pub fn spd_sqrt3(m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let scale = m.abs().max().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).abs().max() > 1e-12 * scale {
        return Err(Error::NotSpd(format!("not symmetric: {m:?}")));
    }
    let eig = m.symmetric_eigen();
    if eig.eigenvalues.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::NotSpd(format!("eigenvalues {:?}", eig.eigenvalues)));
    }
    let root = eig.eigenvalues.map(f64::sqrt);
    let s = eig.eigenvectors * Matrix3::from_diagonal(&root) * eig.eigenvectors.transpose();
    Ok((s + s.transpose()) * 0.5)
}

/// Where `A` and its derivatives come from.
#[derive(Clone, Debug)]
pub enum CoefficientSource {
    Analytic(Coefficients),
    /// Cubic interpolation of the sampled matrix field.
    Sampled(Arc<MatrixField>),
}

impl CoefficientSource {
    fn jet(&self, y: Point) -> Result<(Matrix2<f64>, [Matrix2<f64>; 2])> {
        match self {
            CoefficientSource::Analytic(c) => Ok((c.matrix(y), c.derivatives(y))),
            CoefficientSource::Sampled(m) => m.jet(y),
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self, CoefficientSource::Analytic(_))
    }
}

/// Everything a frame needs, independent of how `u` was obtained.
#[derive(Clone)]
pub struct FrameInputs {
    pub u: Arc<dyn Evaluator>,
    pub coefficients: CoefficientSource,
    pub f: Arc<dyn Evaluator>,
    /// Physical domain box.
    pub lower: Point,
    pub upper: Point,
    /// Grid spacing of the data (margin and resolvable scale).
    pub spacing: f64,
}

impl FrameInputs {
    pub fn from_solution(problem: &ObstacleProblem, solution: &DiscreteSolution) -> Self {
        let grid = problem.grid();
        let coefficients = match &problem.analytic().coefficients {
            Some(c) => CoefficientSource::Analytic(c.clone()),
            None => CoefficientSource::Sampled(Arc::new(problem.a().clone())),
        };
        Self {
            u: Arc::new(solution.evaluator()),
            coefficients,
            f: problem.f_evaluator(),
            lower: grid.origin(),
            upper: grid.upper(),
            spacing: grid.spacing(),
        }
    }
}

#[derive(Clone)]
pub struct NormalizedFrame {
    pub x0: Point,
    pub a0: Matrix2<f64>,
    pub f0: f64,
    /// `A(x0)^{1/2}`.
    pub sqrt_a0: Matrix2<f64>,
    pub sqrt_a0_inv: Matrix2<f64>,
    pub l: Matrix2<f64>,
    pub l_inv: Matrix2<f64>,
    /// Largest `r` with `x0 + L B_r` inside the domain less one cell.
    pub r_max: f64,
    pub spacing: f64,
    inputs: FrameInputs,
}

impl std::fmt::Debug for NormalizedFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NormalizedFrame")
            .field("x0", &self.x0)
            .field("l", &self.l)
            .field("f0", &self.f0)
            .field("r_max", &self.r_max)
            .finish_non_exhaustive()
    }
}

/// Frame at `x0` for a computed solution.
pub fn build_frame(problem: &ObstacleProblem, solution: &DiscreteSolution, x0: Point) -> Result<NormalizedFrame> {
    NormalizedFrame::new(FrameInputs::from_solution(problem, solution), x0)
}

impl NormalizedFrame {
    pub fn new(inputs: FrameInputs, x0: Point) -> Result<Self> {
        let f0 = inputs.f.value(x0)?;
        if !(f0 > 0.0) {
            return Err(Error::Hypothesis(format!(
                "f({}, {}) = {f0} is not positive",
                x0.x, x0.y
            )));
        }
        let a0 = inputs.coefficients.jet(x0)?.0;
        let sqrt_a0 = spd_sqrt(&a0)?;
        let sqrt_a0_inv = sqrt_a0.try_inverse().ok_or_else(|| Error::NotSpd("singular square root".into()))?;
        let l = sqrt_a0 / f0.sqrt();
        let l_inv = sqrt_a0_inv * f0.sqrt();
        // support of the ellipse L B_1 along the axes
        let reach = Vector2::new(l.column(0).norm(), l.column(1).norm());
        let h = inputs.spacing;
        let room = [
            (x0.x - inputs.lower.x - h) / reach.x,
            (inputs.upper.x - x0.x - h) / reach.x,
            (x0.y - inputs.lower.y - h) / reach.y,
            (inputs.upper.y - x0.y - h) / reach.y,
        ];
        let r_max = room.into_iter().fold(f64::INFINITY, f64::min);
        let frame = Self {
            x0,
            a0,
            f0,
            sqrt_a0,
            sqrt_a0_inv,
            l,
            l_inv,
            r_max,
            spacing: h,
            inputs,
        };
        if r_max < frame.min_radius(4.0) {
            return Err(Error::Radius(format!(
                "({}, {}) is too close to the boundary (r_max = {r_max})",
                x0.x, x0.y
            )));
        }
        Ok(frame)
    }

    /// Normalized radius covering `cells` grid cells in every direction:
    /// `cells h |L^{-1}|`.
    pub fn min_radius(&self, cells: f64) -> f64 {
        cells * self.spacing * operator_norm(&self.l_inv)
    }

    pub fn inputs(&self) -> &FrameInputs {
        &self.inputs
    }

    pub fn coefficients_are_analytic(&self) -> bool {
        self.inputs.coefficients.is_analytic()
    }

    pub fn to_physical(&self, x: Point) -> Point {
        self.x0 + self.l * x
    }

    /// Jet of `u_L` at `x`.
    pub fn u_jet(&self, x: Point) -> Result<Jet> {
        let j = self.inputs.u.jet(self.to_physical(x))?;
        Ok(Jet {
            value: j.value,
            grad: self.l.transpose() * j.grad,
            hess: self.l.transpose() * j.hess * self.l,
        })
    }

    /// `C(x)` and `[dC/dx_1, dC/dx_2]`.
    pub fn c_jet(&self, x: Point) -> Result<(Matrix2<f64>, [Matrix2<f64>; 2])> {
        let (a, da) = self.inputs.coefficients.jet(self.to_physical(x))?;
        let s = &self.sqrt_a0_inv;
        let conj = |m: Matrix2<f64>| s * m * s;
        let dk = |k: usize| conj(da[0] * self.l[(0, k)] + da[1] * self.l[(1, k)]);
        Ok((conj(a), [dk(0), dk(1)]))
    }

    /// Column divergences `div C^i = sum_k d c_ki / d x_k`.
    pub fn c_divergence(&self, x: Point) -> Result<Vector2<f64>> {
        let (_, [d1, d2]) = self.c_jet(x)?;
        Ok(Vector2::new(d1[(0, 0)] + d2[(1, 0)], d1[(0, 1)] + d2[(1, 1)]))
    }

    /// `f(x0 + L x) / f(x0)`.
    pub fn f_ratio(&self, x: Point) -> Result<f64> {
        Ok(self.inputs.f.value(self.to_physical(x))? / self.f0)
    }

    /// `u_L` as an evaluator.
    pub fn u_l(&self) -> Arc<dyn Evaluator> {
        Arc::new(Normalized(self.clone()))
    }
}

fn operator_norm(m: &Matrix2<f64>) -> f64 {
    m.singular_values().max()
}

struct Normalized(NormalizedFrame);

impl Evaluator for Normalized {
    fn jet(&self, x: Point) -> Result<Jet> {
        self.0.u_jet(x)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResidualSample {
    pub points: Vec<Point>,
    /// `r(x)`; NaN at skipped points.
    pub values: Vec<f64>,
    /// `f_L / f(x0) - 1`.
    pub ratio_term: Vec<f64>,
    /// `-(c_ij - delta_ij) d_ij u_L`.
    pub stencil_term: Vec<f64>,
    /// `-div(C^i) d_i u_L`.
    pub divergence_term: Vec<f64>,
    /// `|lap u_L - 1 - r|`, the pointwise equation residual of `u_L`.
    pub equation_residual: Vec<f64>,
    /// Points in the contact set of `u_L`, where nothing is computed.
    pub skipped: Vec<bool>,
}

impl ResidualSample {
    /// Largest `|r|` over the points that were not skipped.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.skipped)
            .filter(|(_, s)| !**s)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max)
    }
}

/// Evaluates the normalized residual at `points` (normalized coordinates).
pub fn residual_field(frame: &NormalizedFrame, points: &[Point]) -> Result<ResidualSample> {
    for p in points {
        if p.norm() > frame.r_max {
            return Err(Error::Radius(format!(
                "point ({}, {}) lies outside the normalized ball of radius {}",
                p.x, p.y, frame.r_max
            )));
        }
    }
    let rows: Vec<Option<[f64; 5]>> = points
        .par_iter()
        .map(|&x| -> Result<Option<[f64; 5]>> {
            let u = frame.u_jet(x)?;
            if u.value <= 0.0 {
                return Ok(None);
            }
            let ratio = frame.f_ratio(x)? - 1.0;
            let (c, _) = frame.c_jet(x)?;
            let div = frame.c_divergence(x)?;
            let stencil = -((c - Matrix2::identity()).component_mul(&u.hess)).sum();
            let divergence = -div.dot(&u.grad);
            let value = ratio + stencil + divergence;
            let equation = (u.hess.trace() - 1.0 - value).abs();
            Ok(Some([value, ratio, stencil, divergence, equation]))
        })
        .collect::<Result<_>>()?;
    let pick = |k: usize| rows.iter().map(|r| r.map_or(f64::NAN, |v| v[k])).collect::<Vec<_>>();
    Ok(ResidualSample {
        points: points.to_vec(),
        values: pick(0),
        ratio_term: pick(1),
        stencil_term: pick(2),
        divergence_term: pick(3),
        equation_residual: pick(4),
        skipped: rows.iter().map(Option::is_none).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnEvaluator;
    use crate::problem::CoefficientFamily;
    use approx::assert_abs_diff_eq;

    fn quadratic(q: Matrix2<f64>) -> Arc<dyn Evaluator> {
        Arc::new(FnEvaluator::new(move |x: Point| Jet {
            value: 0.5 * x.dot(&(q * x)),
            grad: q * x,
            hess: q,
        }))
    }

    fn constant(c: f64) -> Arc<dyn Evaluator> {
        Arc::new(FnEvaluator::new(move |_| Jet { value: c, ..Jet::zero() }))
    }

    fn inputs(u: Arc<dyn Evaluator>, a: CoefficientFamily, f: Arc<dyn Evaluator>) -> FrameInputs {
        FrameInputs {
            u,
            coefficients: CoefficientSource::Analytic(a.into()),
            f,
            lower: Point::new(-1.0, -1.0),
            upper: Point::new(1.0, 1.0),
            spacing: 1.0 / 64.0,
        }
    }

    #[test]
    fn square_roots() {
        assert_eq!(spd_sqrt(&Matrix2::identity()).unwrap(), Matrix2::identity());
        let d = spd_sqrt(&Matrix2::new(4.0, 0.0, 0.0, 9.0)).unwrap();
        assert_abs_diff_eq!(d, Matrix2::new(2.0, 0.0, 0.0, 3.0), epsilon = 1e-15);
        let m = Matrix2::new(2.0, 1.0, 1.0, 2.0);
        let s = spd_sqrt(&m).unwrap();
        assert_abs_diff_eq!(s * s, m, epsilon = 1e-12 * 2.0);
        assert_abs_diff_eq!(s[(0, 0)], 1.36603, epsilon = 1e-5);
        assert_abs_diff_eq!(s[(0, 1)], 0.36603, epsilon = 1e-5);
        assert!(spd_sqrt(&Matrix2::new(1.0, 0.0, 0.0, -1.0)).is_err());
        assert!(spd_sqrt(&Matrix2::new(1.0, 2.0, 2.0, 1.0)).is_err());

        let m3 = Matrix3::new(4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0);
        let s3 = spd_sqrt3(&m3).unwrap();
        assert_abs_diff_eq!(s3 * s3, m3, epsilon = 1e-12 * 4.0);
    }

    #[test]
    fn scaled_identity_gives_identity_frame() {
        let four = CoefficientFamily::Constant(Matrix2::identity() * 4.0);
        let f = inputs(quadratic(Matrix2::identity() * 0.5), four, constant(4.0));
        let frame = NormalizedFrame::new(f, Point::new(0.1, -0.2)).unwrap();
        assert_abs_diff_eq!(frame.l, Matrix2::identity(), epsilon = 1e-15);
        let x = Point::new(0.3, 0.1);
        assert_abs_diff_eq!(frame.c_jet(x).unwrap().0, Matrix2::identity(), epsilon = 1e-15);
        assert_abs_diff_eq!(frame.f_ratio(x).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn unit_frame_translates() {
        let u = quadratic(Matrix2::new(1.0, 0.2, 0.2, 0.0));
        let frame = NormalizedFrame::new(inputs(u.clone(), CoefficientFamily::Identity, constant(1.0)), Point::new(0.2, 0.3)).unwrap();
        let x = Point::new(-0.1, 0.25);
        assert_eq!(frame.u_jet(x).unwrap().value, u.value(x + Point::new(0.2, 0.3)).unwrap());
    }

    #[test]
    fn anisotropic_frame_stretches() {
        let u = quadratic(Matrix2::new(1.0, 0.3, 0.3, 0.5));
        let a = CoefficientFamily::Constant(Matrix2::new(4.0, 0.0, 0.0, 1.0));
        let frame = NormalizedFrame::new(inputs(u.clone(), a, constant(1.0)), Point::zeros()).unwrap();
        assert_abs_diff_eq!(frame.l, Matrix2::new(2.0, 0.0, 0.0, 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(frame.l * frame.l, frame.a0 / frame.f0, epsilon = 1e-14);
        for x in [Point::new(0.1, 0.2), Point::new(-0.2, 0.05), Point::new(0.15, -0.3), Point::new(0.0, 0.4), Point::new(-0.05, -0.05)] {
            let expected = u.value(Point::new(2.0 * x.x, x.y)).unwrap();
            assert_abs_diff_eq!(frame.u_jet(x).unwrap().value, expected, epsilon = 1e-15);
        }
        // the frame fits inside [-1, 1]^2 less a cell along the long axis
        assert_abs_diff_eq!(frame.r_max, (1.0 - 1.0 / 64.0) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn frame_is_normalized_at_origin() {
        let a = CoefficientFamily::Rotated {
            lambdas: [1.5, 0.75],
            angle: 0.3,
            amplitude: 0.4,
            wavenumber: Vector2::new(1.0, 2.0),
        };
        let f: Arc<dyn Evaluator> = Arc::new(FnEvaluator::new(|x: Point| Jet {
            value: 2.0 + x.x,
            ..Jet::zero()
        }));
        let frame = NormalizedFrame::new(inputs(quadratic(Matrix2::identity()), a, f), Point::new(0.2, -0.1)).unwrap();
        assert_abs_diff_eq!(frame.c_jet(Point::zeros()).unwrap().0, Matrix2::identity(), epsilon = 1e-10);
        assert_abs_diff_eq!(frame.f_ratio(Point::zeros()).unwrap(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(frame.l * frame.l, frame.a0 / frame.f0, epsilon = 1e-12);
    }

    #[test]
    fn nonpositive_f_and_boundary_points_are_rejected() {
        let bad = inputs(quadratic(Matrix2::identity()), CoefficientFamily::Identity, constant(0.0));
        assert!(matches!(NormalizedFrame::new(bad, Point::zeros()), Err(Error::Hypothesis(_))));
        let near = inputs(quadratic(Matrix2::identity()), CoefficientFamily::Identity, constant(1.0));
        assert!(matches!(NormalizedFrame::new(near, Point::new(0.97, 0.0)), Err(Error::Radius(_))));
    }

    #[test]
    fn unit_data_have_zero_residual() {
        let frame = NormalizedFrame::new(
            inputs(quadratic(Matrix2::new(0.7, 0.1, 0.1, 0.3)), CoefficientFamily::Identity, constant(1.0)),
            Point::zeros(),
        )
        .unwrap();
        let pts = [Point::new(0.1, 0.2), Point::new(-0.3, 0.1)];
        let r = residual_field(&frame, &pts).unwrap();
        for k in 0..2 {
            assert_eq!(r.values[k], 0.0);
            assert_abs_diff_eq!(r.equation_residual[k], 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn linear_f_gives_ratio_term_only() {
        let f: Arc<dyn Evaluator> = Arc::new(FnEvaluator::new(|x: Point| Jet {
            value: 1.0 + x.x,
            ..Jet::zero()
        }));
        let frame = NormalizedFrame::new(
            inputs(quadratic(Matrix2::identity() * 0.5), CoefficientFamily::Identity, f),
            Point::zeros(),
        )
        .unwrap();
        let pts = [Point::new(0.1, 0.2), Point::new(-0.3, 0.1), Point::new(0.25, -0.4)];
        let r = residual_field(&frame, &pts).unwrap();
        for (k, p) in pts.iter().enumerate() {
            assert_abs_diff_eq!(r.values[k], p.x, epsilon = 1e-15);
            assert_eq!(r.stencil_term[k], 0.0);
            assert_abs_diff_eq!(
                r.values[k],
                r.ratio_term[k] + r.stencil_term[k] + r.divergence_term[k],
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn contact_points_are_skipped() {
        let u: Arc<dyn Evaluator> = Arc::new(FnEvaluator::new(|x: Point| {
            let s = x.x.max(0.0);
            Jet {
                value: 0.5 * s * s,
                grad: Vector2::new(s, 0.0),
                hess: if s > 0.0 { Matrix2::new(1.0, 0.0, 0.0, 0.0) } else { Matrix2::zeros() },
            }
        }));
        let frame = NormalizedFrame::new(inputs(u, CoefficientFamily::Identity, constant(1.0)), Point::zeros()).unwrap();
        let r = residual_field(&frame, &[Point::new(-0.2, 0.0), Point::new(0.2, 0.0)]).unwrap();
        assert_eq!(r.skipped, vec![true, false]);
        assert!(r.values[0].is_nan());
        assert_eq!(r.max_abs(), 0.0);
    }
}
