//! The continuous obstacle problem, its derived right-hand side and the
//! hypothesis checks on the data.
//!
//! The problem is posed for `w >= psi` minimizing
//! `int <A grad w, grad w> + 2 h w` with `w = g` on the boundary. The
//! solver works with `u = w - psi`, which solves the zero-obstacle problem
//! with right-hand side `f = h - div(A grad psi)`.

mod coeff;
mod data;
mod hypotheses;
mod modulus;
pub mod scenarios;

use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use crate::field::{Evaluator, FnEvaluator, Grid, Jet, MatrixField, Point, ScalarField};
use crate::solve::Stencil;
use crate::{Error, Result};

pub use coeff::{CoefficientFamily, Coefficients};
pub use data::{BoundaryData, ObstacleShape, Rhs};
pub use hypotheses::{check_coercivity, check_hypotheses, Coercivity, HypothesisReport};
pub use modulus::{dini_integral, double_dini_integral, log_log_slope, modulus_of_continuity, Modulus};

/// Closed-form description of a problem on a square or rectangular box.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub lower: Point,
    pub upper: Point,
    /// Nodes along `x`.
    pub resolution: usize,
    pub coefficients: Coefficients,
    pub obstacle: ObstacleShape,
    pub rhs: Rhs,
    pub boundary: BoundaryData,
    pub p: f64,
    pub dini_a: f64,
}

impl ProblemSpec {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.lower, self.upper - self.lower, self.resolution)
    }

    /// Same problem on a grid with `resolution` nodes along `x`.
    pub fn with_resolution(&self, resolution: usize) -> ProblemSpec {
        ProblemSpec {
            resolution,
            ..self.clone()
        }
    }
}

/// Which closed forms the problem was built from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Analytic {
    pub coefficients: Option<Coefficients>,
    pub obstacle: Option<ObstacleShape>,
    pub rhs: Option<Rhs>,
    pub boundary: Option<BoundaryData>,
}

#[derive(Clone, Debug)]
pub struct ObstacleProblem {
    grid: Grid,
    a: MatrixField,
    psi: ScalarField,
    h: ScalarField,
    g: ScalarField,
    p: f64,
    dini_a: f64,
    analytic: Analytic,
    f: ScalarField,
    f_symbolic: bool,
    warnings: Vec<String>,
}

impl ObstacleProblem {
    /// Problem from sampled data. `g` is read on boundary nodes only.
    pub fn from_fields(
        a: MatrixField,
        psi: ScalarField,
        h: ScalarField,
        g: ScalarField,
        p: f64,
        dini_a: f64,
    ) -> Result<Self> {
        Self::build(a, psi, h, g, p, dini_a, Analytic::default())
    }

    pub fn from_spec(spec: &ProblemSpec) -> Result<Self> {
        let grid = spec.grid()?;
        let a = spec.coefficients.sample(&grid)?;
        let psi = ScalarField::from_fn(&grid, |x| spec.obstacle.jet(x).value)?;
        let h = ScalarField::from_fn(&grid, |x| spec.rhs.value(x))?;
        let g = ScalarField::from_fn(&grid, |x| spec.boundary.value(x))?;
        let analytic = Analytic {
            coefficients: Some(spec.coefficients.clone()),
            obstacle: Some(spec.obstacle.clone()),
            rhs: Some(spec.rhs.clone()),
            boundary: Some(spec.boundary.clone()),
        };
        Self::build(a, psi, h, g, spec.p, spec.dini_a, analytic)
    }

    fn build(
        a: MatrixField,
        psi: ScalarField,
        h: ScalarField,
        g: ScalarField,
        p: f64,
        dini_a: f64,
        analytic: Analytic,
    ) -> Result<Self> {
        let grid = a.grid().clone();
        if psi.grid() != &grid || h.grid() != &grid || g.grid() != &grid {
            return Err(Error::Argument("problem fields live on different grids".into()));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::Argument(format!("Sobolev exponent must be positive, got {p}")));
        }
        if !(dini_a >= 0.0 && dini_a.is_finite()) {
            return Err(Error::Argument(format!("log power must be >= 0, got {dini_a}")));
        }
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                if grid.is_boundary(i, j) && psi.at(i, j) > g.at(i, j) {
                    return Err(Error::Argument(format!(
                        "obstacle exceeds boundary data at node ({i}, {j})"
                    )));
                }
            }
        }
        let mut problem = Self {
            f: h.clone(),
            grid,
            a,
            psi,
            h,
            g,
            p,
            dini_a,
            analytic,
            f_symbolic: false,
            warnings: Vec::new(),
        };
        let (f, symbolic) = problem.compute_f()?;
        if f.min() <= 0.0 {
            problem
                .warnings
                .push(format!("f = h - div(A grad psi) is not positive (min {})", f.min()));
        }
        problem.f = f;
        problem.f_symbolic = symbolic;
        Ok(problem)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn a(&self) -> &MatrixField {
        &self.a
    }

    pub fn psi(&self) -> &ScalarField {
        &self.psi
    }

    pub fn h(&self) -> &ScalarField {
        &self.h
    }

    pub fn g(&self) -> &ScalarField {
        &self.g
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dini_a(&self) -> f64 {
        self.dini_a
    }

    pub fn analytic(&self) -> &Analytic {
        &self.analytic
    }

    /// The derived right-hand side `f = h - div(A grad psi)`.
    pub fn f(&self) -> &ScalarField {
        &self.f
    }

    /// True when `f` came from the closed forms rather than differences.
    pub fn f_is_symbolic(&self) -> bool {
        self.f_symbolic
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn obstacle_is_zero(&self) -> bool {
        matches!(self.analytic.obstacle, Some(ObstacleShape::Zero)) || self.psi.values().iter().all(|v| *v == 0.0)
    }

    /// Coefficient matrix at an arbitrary point: closed form when known,
    /// cubic interpolation otherwise.
    pub fn coefficient_at(&self, x: Point) -> Result<Matrix2<f64>> {
        match &self.analytic.coefficients {
            Some(c) => Ok(c.matrix(x)),
            None => Ok(self.a.jet(x)?.0),
        }
    }

    /// Evaluator of `f`.
    pub fn f_evaluator(&self) -> Arc<dyn Evaluator> {
        if self.f_symbolic {
            let this = self.analytic.clone();
            return Arc::new(FnEvaluator::new(move |x| Jet {
                value: symbolic_f(&this, x).expect("symbolic data present"),
                ..Jet::zero()
            }));
        }
        Arc::new(crate::field::FieldEvaluator::new(
            Arc::new(self.f.clone()),
            crate::field::Order::Cubic,
        ))
    }

    /// Problem on the grid with every other node (injection of all
    /// fields), keeping the closed forms.
    pub fn coarsen(&self) -> Option<ObstacleProblem> {
        let mut c = ObstacleProblem::build(
            self.a.coarsened()?,
            self.psi.coarsened()?,
            self.h.coarsened()?,
            self.g.coarsened()?,
            self.p,
            self.dini_a,
            self.analytic.clone(),
        )
        .ok()?;
        c.warnings = self.warnings.clone();
        Some(c)
    }

    /// Same data scaled: `A -> s A`, `h -> s h`, `psi`, `g` unchanged, so
    /// the solution is unchanged.
    pub fn scaled(&self, s: f64) -> Result<ObstacleProblem> {
        let a = MatrixField::new(self.grid.clone(), self.a.values().iter().map(|m| m * s).collect())?;
        let h = ScalarField::new(self.grid.clone(), self.h.values().iter().map(|v| v * s).collect())?;
        let mut analytic = self.analytic.clone();
        if let Some(c) = analytic.coefficients.as_mut() {
            c.scale *= s;
        }
        if let Some(r) = analytic.rhs.as_mut() {
            *r = match r {
                Rhs::Constant(c) => Rhs::Constant(*c * s),
                Rhs::Affine { c, b } => Rhs::Affine { c: *c * s, b: *b * s },
            };
        }
        Self::build(a, self.psi.clone(), h, self.g.clone(), self.p, self.dini_a, analytic)
    }

    fn compute_f(&self) -> Result<(ScalarField, bool)> {
        if self.analytic.obstacle.as_ref().is_some_and(ObstacleShape::is_zero)
            || (self.analytic.obstacle.is_none() && self.psi.values().iter().all(|v| *v == 0.0))
        {
            return Ok((self.h.clone(), self.analytic.rhs.is_some()));
        }
        if self.analytic.coefficients.is_some() && self.analytic.obstacle.is_some() && self.analytic.rhs.is_some() {
            let f = ScalarField::from_fn(&self.grid, |x| symbolic_f(&self.analytic, x).expect("checked"))?;
            return Ok((f, true));
        }
        Ok((derive_f_numeric(self)?, false))
    }
}

fn symbolic_f(analytic: &Analytic, x: Point) -> Option<f64> {
    let c = analytic.coefficients.as_ref()?;
    let psi = analytic.obstacle.as_ref()?.jet(x);
    let h = analytic.rhs.as_ref()?.value(x);
    let div: Vector2<f64> = c.column_divergence(x);
    Some(h - (div.dot(&psi.grad) + (c.matrix(x) * psi.hess).trace()))
}

/// `h - div(A grad psi)` with the solver's difference operator; boundary
/// nodes copy the nearest interior node.
fn derive_f_numeric(problem: &ObstacleProblem) -> Result<ScalarField> {
    let grid = problem.grid();
    let stencil = Stencil::from_problem(problem);
    let k_psi = stencil.apply(problem.psi().values());
    let h2 = grid.spacing() * grid.spacing();
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut f = vec![0.0; grid.len()];
    for j in 0..ny {
        for i in 0..nx {
            let (ii, jj) = (i.clamp(1, nx - 2), j.clamp(1, ny - 2));
            let k = grid.index(ii, jj);
            f[grid.index(i, j)] = problem.h().at(i, j) + k_psi[k] / h2;
        }
    }
    ScalarField::new(grid.clone(), f)
}

/// `f = h - div(A grad psi)` for the given problem.
pub fn derive_f(problem: &ObstacleProblem) -> &ScalarField {
    problem.f()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(obstacle: ObstacleShape, rhs: Rhs) -> ProblemSpec {
        ProblemSpec {
            lower: Point::new(-1.0, -1.0),
            upper: Point::new(1.0, 1.0),
            resolution: 17,
            coefficients: CoefficientFamily::Identity.into(),
            obstacle,
            rhs,
            boundary: BoundaryData::Constant(1.0),
            p: 4.0,
            dini_a: 1.0,
        }
    }

    #[test]
    fn zero_obstacle_gives_h_bit_identically() {
        let s = spec(ObstacleShape::Zero, Rhs::Affine { c: 1.0, b: Vector2::new(0.3, -0.1) });
        let prob = ObstacleProblem::from_spec(&s).unwrap();
        assert_eq!(prob.f(), prob.h());
        // numeric path as well
        let numeric = ObstacleProblem::from_fields(
            prob.a().clone(),
            prob.psi().clone(),
            prob.h().clone(),
            prob.g().clone(),
            4.0,
            1.0,
        )
        .unwrap();
        assert_eq!(numeric.f(), prob.h());
    }

    #[test]
    fn concave_obstacle_gives_unit_f() {
        let psi = ObstacleShape::Quadratic {
            hessian: -Matrix2::identity() * 0.5,
            center: Point::zeros(),
            c: -0.5,
        };
        let prob = ObstacleProblem::from_spec(&spec(psi.clone(), Rhs::Constant(0.0))).unwrap();
        assert!(prob.f_is_symbolic());
        for v in prob.f().values() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
        }
        let numeric = ObstacleProblem::from_fields(
            prob.a().clone(),
            prob.psi().clone(),
            prob.h().clone(),
            prob.g().clone(),
            4.0,
            1.0,
        )
        .unwrap();
        for v in numeric.f().values() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn affine_obstacle_leaves_h() {
        let psi = ObstacleShape::Affine {
            c: 0.0,
            b: Vector2::new(0.5, 0.0),
        };
        let prob = ObstacleProblem::from_spec(&spec(psi, Rhs::Constant(2.0))).unwrap();
        for v in prob.f().values() {
            assert_abs_diff_eq!(*v, 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn obstacle_above_boundary_data_is_rejected() {
        let psi = ObstacleShape::Affine {
            c: 2.0,
            b: Vector2::zeros(),
        };
        assert!(ObstacleProblem::from_spec(&spec(psi, Rhs::Constant(1.0))).is_err());
    }

    #[test]
    fn non_positive_f_is_a_warning() {
        let prob = ObstacleProblem::from_spec(&spec(ObstacleShape::Zero, Rhs::Constant(-1.0))).unwrap();
        assert_eq!(prob.warnings().len(), 1);
    }
}
