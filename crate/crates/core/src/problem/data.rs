//! Closed-form obstacles, right-hand sides and boundary data.

use std::sync::OnceLock;

use nalgebra::{Matrix2, Vector2};

use crate::field::{Jet, Point};
use crate::quad::GaussLegendre;

#[derive(Clone, Debug, PartialEq)]
pub enum ObstacleShape {
    Zero,
    /// `c + <b, x>`.
    Affine { c: f64, b: Vector2<f64> },
    /// `c + 1/2 <H (x - center), x - center>`.
    Quadratic { hessian: Matrix2<f64>, center: Point, c: f64 },
}

impl ObstacleShape {
    pub fn jet(&self, x: Point) -> Jet {
        match self {
            ObstacleShape::Zero => Jet::zero(),
            ObstacleShape::Affine { c, b } => Jet {
                value: c + b.dot(&x),
                grad: *b,
                hess: Matrix2::zeros(),
            },
            ObstacleShape::Quadratic { hessian, center, c } => {
                let d = x - center;
                Jet {
                    value: c + 0.5 * d.dot(&(hessian * d)),
                    grad: hessian * d,
                    hess: *hessian,
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ObstacleShape::Zero)
    }
}

/// The source term `h`.
#[derive(Clone, Debug, PartialEq)]
pub enum Rhs {
    Constant(f64),
    /// `c + <b, x>`.
    Affine { c: f64, b: Vector2<f64> },
}

impl Rhs {
    pub fn value(&self, x: Point) -> f64 {
        match self {
            Rhs::Constant(c) => *c,
            Rhs::Affine { c, b } => c + b.dot(&x),
        }
    }
}

/// Dirichlet data. The non-constant variants are exact solutions of the
/// unit problem (`A = Id`, `f = 1`, zero obstacle) or, for the radial
/// profile, of the matching Hölder problem.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryData {
    Constant(f64),
    /// `1/2 (<x, e> - offset)_+^2`.
    HalfSpace { direction: Vector2<f64>, offset: f64 },
    /// `1/2 <Q (x - center), x - center>`.
    Quadratic { q: Matrix2<f64>, center: Point },
    /// Radial solution vanishing on the disc of radius `radius`:
    /// `r^2/4 - R^2/4 - (R^2/2) ln(r/R)` outside.
    DiscContact { center: Point, radius: f64 },
    /// `U(|x - center|) - offset` where `U` is the radial solution of
    /// `div((1 + eps r^alpha) grad U) = forcing` with `U(0) = U'(0) = 0`.
    RadialProfile {
        center: Point,
        eps: f64,
        alpha: f64,
        forcing: f64,
        offset: f64,
    },
}

fn radial_jet(d: Vector2<f64>, value: f64, d1: f64, d2: f64, d1_over_r: f64) -> Jet {
    let r = d.norm();
    if r == 0.0 {
        return Jet {
            value,
            grad: Vector2::zeros(),
            hess: Matrix2::identity() * d1_over_r,
        };
    }
    let e = d / r;
    let ee = e * e.transpose();
    Jet {
        value,
        grad: e * d1,
        hess: ee * d2 + (Matrix2::identity() - ee) * d1_over_r,
    }
}

fn profile_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(24))
}

impl BoundaryData {
    pub fn jet(&self, x: Point) -> Jet {
        match self {
            BoundaryData::Constant(c) => Jet {
                value: *c,
                ..Jet::zero()
            },
            BoundaryData::HalfSpace { direction, offset } => {
                let s = direction.dot(&x) - offset;
                if s <= 0.0 {
                    Jet::zero()
                } else {
                    Jet {
                        value: 0.5 * s * s,
                        grad: direction * s,
                        hess: direction * direction.transpose(),
                    }
                }
            }
            BoundaryData::Quadratic { q, center } => {
                let d = x - center;
                Jet {
                    value: 0.5 * d.dot(&(q * d)),
                    grad: q * d,
                    hess: *q,
                }
            }
            BoundaryData::DiscContact { center, radius } => {
                let d = x - center;
                let r = d.norm();
                let big = radius * radius;
                if r <= *radius {
                    return Jet::zero();
                }
                let value = 0.25 * r * r - 0.25 * big - 0.5 * big * (r / radius).ln();
                let d1 = 0.5 * r - 0.5 * big / r;
                let d2 = 0.5 + 0.5 * big / (r * r);
                radial_jet(d, value, d1, d2, d1 / r)
            }
            BoundaryData::RadialProfile {
                center,
                eps,
                alpha,
                forcing,
                offset,
            } => {
                let d = x - center;
                let r = d.norm();
                let a = |s: f64| 1.0 + eps * s.powf(*alpha);
                // s = r t^2 keeps the integrand polynomial-like near 0
                let value = profile_rule().integrate(0.0, 1.0, |t| {
                    let s = r * t * t;
                    forcing * s / (2.0 * a(s)) * 2.0 * r * t
                });
                let d1 = forcing * r / (2.0 * a(r));
                let da = if r > 0.0 { eps * alpha * r.powf(alpha - 1.0) } else { 0.0 };
                let d2 = forcing / (2.0 * a(r)) - forcing * r * da / (2.0 * a(r) * a(r));
                radial_jet(d, value - offset, d1, d2, forcing / (2.0 * a(r)))
            }
        }
    }

    pub fn value(&self, x: Point) -> f64 {
        self.jet(x).value
    }
}
