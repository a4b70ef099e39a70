//! Built-in scenarios on `[-1, 1]^2` with zero obstacle and `h = 1`.
//!
//! `res` is the node count per axis, so the spacing is `2 / (res - 1)`.

use nalgebra::{Matrix2, Vector2};

use super::{BoundaryData, CoefficientFamily, Coefficients, ObstacleShape, ProblemSpec, Rhs};
use crate::field::Point;
use crate::{Error, Result};

pub const NAMES: [&str; 7] = [
    "half_space",
    "radial",
    "disc",
    "holder_half_space",
    "holder_radial",
    "rotated",
    "indefinite",
];

/// Node count per axis on `[-1, 1]` for spacing `h`.
pub fn resolution_for(h: f64) -> usize {
    (2.0 / h).round() as usize + 1
}

fn base(res: usize, coefficients: CoefficientFamily, boundary: BoundaryData, p: f64) -> ProblemSpec {
    ProblemSpec {
        lower: Point::new(-1.0, -1.0),
        upper: Point::new(1.0, 1.0),
        resolution: res,
        coefficients: coefficients.into(),
        obstacle: ObstacleShape::Zero,
        rhs: Rhs::Constant(1.0),
        boundary,
        p,
        dini_a: 1.0,
    }
}

pub fn holder_family() -> CoefficientFamily {
    CoefficientFamily::Holder {
        eps: 0.1,
        alpha: 0.5,
        center: Point::zeros(),
    }
}

fn half_space_data() -> BoundaryData {
    BoundaryData::HalfSpace {
        direction: Vector2::new(1.0, 0.0),
        offset: 0.0,
    }
}

/// Exact solution `1/2 (x_1)_+^2`.
pub fn half_space(res: usize) -> ProblemSpec {
    base(res, CoefficientFamily::Identity, half_space_data(), 4.0)
}

/// Exact solution `|x|^2 / 4` with contact set `{0}`.
pub fn radial(res: usize) -> ProblemSpec {
    base(
        res,
        CoefficientFamily::Identity,
        BoundaryData::Quadratic {
            q: Matrix2::identity() * 0.5,
            center: Point::zeros(),
        },
        4.0,
    )
}

/// Exact solution vanishing on the disc of radius 1/2.
pub fn disc(res: usize) -> ProblemSpec {
    base(
        res,
        CoefficientFamily::Identity,
        BoundaryData::DiscContact {
            center: Point::zeros(),
            radius: 0.5,
        },
        4.0,
    )
}

/// Hölder coefficients `(1 + 0.1 |x|^{1/2}) Id`, `p = 3`, half-space data.
pub fn holder_half_space(res: usize) -> ProblemSpec {
    base(res, holder_family(), half_space_data(), 3.0)
}

/// Hölder coefficients with the matching radial solution, singular at 0.
///
/// The data are lowered by `h^2 / 8` so that the origin is a contact node;
/// without it the discretization error leaves `u(0)` slightly positive and
/// the contact set empty.
pub fn holder_radial(res: usize) -> ProblemSpec {
    let h = 2.0 / (res.max(2) - 1) as f64;
    base(
        res,
        holder_family(),
        BoundaryData::RadialProfile {
            center: Point::zeros(),
            eps: 0.1,
            alpha: 0.5,
            forcing: 1.0,
            offset: h * h / 8.0,
        },
        3.0,
    )
}

/// Smoothly rotating anisotropic coefficients with half-space data.
pub fn rotated(res: usize) -> ProblemSpec {
    base(
        res,
        CoefficientFamily::Rotated {
            lambdas: [1.5, 0.75],
            angle: 0.3,
            amplitude: 0.4,
            wavenumber: Vector2::new(1.0, 2.0),
        },
        half_space_data(),
        4.0,
    )
}

/// Indefinite constant matrix; fails the coercivity check.
pub fn indefinite(res: usize) -> ProblemSpec {
    base(
        res,
        CoefficientFamily::Constant(Matrix2::new(1.0, 0.0, 0.0, -1.0)),
        BoundaryData::Constant(0.0),
        4.0,
    )
}

/// `A -> s A` and `h -> s h`; the solution does not change.
pub fn scaled(spec: &ProblemSpec, s: f64) -> ProblemSpec {
    let rhs = match &spec.rhs {
        Rhs::Constant(c) => Rhs::Constant(c * s),
        Rhs::Affine { c, b } => Rhs::Affine { c: c * s, b: b * s },
    };
    ProblemSpec {
        coefficients: Coefficients {
            family: spec.coefficients.family.clone(),
            scale: spec.coefficients.scale * s,
        },
        rhs,
        ..spec.clone()
    }
}

pub fn by_name(name: &str, res: usize) -> Result<ProblemSpec> {
    Ok(match name {
        "half_space" => half_space(res),
        "radial" => radial(res),
        "disc" => disc(res),
        "holder_half_space" => holder_half_space(res),
        "holder_radial" => holder_radial(res),
        "rotated" => rotated(res),
        "indefinite" => indefinite(res),
        other => return Err(Error::Argument(format!("unknown scenario {other:?}"))),
    })
}
