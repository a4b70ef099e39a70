use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use super::{interp, Order, Point, ScalarField};
use crate::{Error, Result};

/// Value, gradient and Hessian of a function at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vector2<f64>,
    pub hess: Matrix2<f64>,
}

impl Jet {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            grad: Vector2::zeros(),
            hess: Matrix2::zeros(),
        }
    }
}

impl std::ops::Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            value: self.value + o.value,
            grad: self.grad + o.grad,
            hess: self.hess + o.hess,
        }
    }
}

/// Anything that can be evaluated with derivatives at points of the plane.
pub trait Evaluator: Send + Sync {
    fn jet(&self, x: Point) -> Result<Jet>;

    fn value(&self, x: Point) -> Result<f64> {
        Ok(self.jet(x)?.value)
    }

    /// Closed box outside of which evaluation fails, if any.
    fn domain(&self) -> Option<(Point, Point)> {
        None
    }
}

/// Interpolates a grid field; optionally contact-aware and shifted by a
/// second evaluator (for instance the obstacle).
#[derive(Clone)]
pub struct FieldEvaluator {
    field: Arc<ScalarField>,
    mask: Option<Arc<Vec<bool>>>,
    order: Order,
    plus: Option<Arc<dyn Evaluator>>,
}

impl FieldEvaluator {
    pub fn new(field: Arc<ScalarField>, order: Order) -> Self {
        Self {
            field,
            mask: None,
            order,
            plus: None,
        }
    }

    /// Cubic interpolation that treats flagged nodes as a contact region
    /// where the field vanishes.
    pub fn masked(field: Arc<ScalarField>, mask: Arc<Vec<bool>>) -> Result<Self> {
        if mask.len() != field.grid().len() {
            return Err(Error::Argument("mask length does not match the grid".into()));
        }
        Ok(Self {
            field,
            mask: Some(mask),
            order: Order::Cubic,
            plus: None,
        })
    }

    /// Adds `other` to every evaluation.
    pub fn plus(mut self, other: Arc<dyn Evaluator>) -> Self {
        self.plus = Some(other);
        self
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }
}

impl Evaluator for FieldEvaluator {
    fn jet(&self, x: Point) -> Result<Jet> {
        let base = match (self.order, &self.mask) {
            (Order::Linear, _) => interp::bilinear_jet(&self.field, x)?,
            (Order::Cubic, Some(mask)) => interp::cubic_jet(&self.field, x, Some(mask))?,
            (Order::Cubic, None) => interp::cubic_jet(&self.field, x, None)?,
        };
        match &self.plus {
            Some(p) => Ok(base + p.jet(x)?),
            None => Ok(base),
        }
    }

    fn domain(&self) -> Option<(Point, Point)> {
        let g = self.field.grid();
        Some((g.origin(), g.upper()))
    }
}

/// Closure-backed evaluator for analytic functions.
#[derive(Clone)]
pub struct FnEvaluator {
    f: Arc<dyn Fn(Point) -> Jet + Send + Sync>,
    domain: Option<(Point, Point)>,
}

impl FnEvaluator {
    pub fn new(f: impl Fn(Point) -> Jet + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            domain: None,
        }
    }

    pub fn with_domain(mut self, lo: Point, hi: Point) -> Self {
        self.domain = Some((lo, hi));
        self
    }
}

impl Evaluator for FnEvaluator {
    fn jet(&self, x: Point) -> Result<Jet> {
        if let Some((lo, hi)) = self.domain {
            let tol = 1e-12 * (hi - lo).norm();
            if x.x < lo.x - tol || x.y < lo.y - tol || x.x > hi.x + tol || x.y > hi.y + tol {
                return Err(Error::OutOfBounds {
                    point: x,
                    reason: "outside the evaluator domain".into(),
                });
            }
        }
        Ok((self.f)(x))
    }

    fn domain(&self) -> Option<(Point, Point)> {
        self.domain
    }
}
