//! Built-in coefficient families with closed-form derivatives.

use nalgebra::{Matrix2, Vector2};

use crate::field::{Grid, MatrixField, Point};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientFamily {
    Identity,
    /// The same matrix everywhere (need not be positive definite, so that
    /// the coercivity checker has something to reject).
    Constant(Matrix2<f64>),
    /// `R(t) diag(l1, l2) R(t)^T` with `t(x) = angle + amplitude sin(<k, x>)`.
    Rotated {
        lambdas: [f64; 2],
        angle: f64,
        amplitude: f64,
        wavenumber: Vector2<f64>,
    },
    /// `(1 + eps |x - center|^alpha) Id`.
    Holder { eps: f64, alpha: f64, center: Point },
}

/// A family multiplied by a positive constant.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients {
    pub family: CoefficientFamily,
    pub scale: f64,
}

impl From<CoefficientFamily> for Coefficients {
    fn from(family: CoefficientFamily) -> Self {
        Self { family, scale: 1.0 }
    }
}

fn rotation(t: f64) -> (Matrix2<f64>, Matrix2<f64>) {
    let (s, c) = t.sin_cos();
    (Matrix2::new(c, -s, s, c), Matrix2::new(-s, -c, c, -s))
}

fn symmetrize(m: Matrix2<f64>) -> Matrix2<f64> {
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    Matrix2::new(m[(0, 0)], off, off, m[(1, 1)])
}

impl Coefficients {
    pub fn new(family: CoefficientFamily, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Argument(format!("coefficient scale must be positive, got {scale}")));
        }
        Ok(Self { family, scale })
    }

    pub fn matrix(&self, x: Point) -> Matrix2<f64> {
        self.scale * self.base(x)
    }

    fn base(&self, x: Point) -> Matrix2<f64> {
        match &self.family {
            CoefficientFamily::Identity => Matrix2::identity(),
            CoefficientFamily::Constant(m) => *m,
            CoefficientFamily::Rotated {
                lambdas,
                angle,
                amplitude,
                wavenumber,
            } => {
                let t = angle + amplitude * wavenumber.dot(&x).sin();
                let (r, _) = rotation(t);
                symmetrize(r * Matrix2::from_diagonal(&Vector2::new(lambdas[0], lambdas[1])) * r.transpose())
            }
            CoefficientFamily::Holder { eps, alpha, center } => {
                Matrix2::identity() * (1.0 + eps * (x - center).norm().powf(*alpha))
            }
        }
    }

    /// `[dA/dx, dA/dy]` at `x`; the Hölder family returns zero at its
    /// center, where the derivative is unbounded.
    pub fn derivatives(&self, x: Point) -> [Matrix2<f64>; 2] {
        let d = match &self.family {
            CoefficientFamily::Identity | CoefficientFamily::Constant(_) => [Matrix2::zeros(); 2],
            CoefficientFamily::Rotated {
                lambdas,
                angle,
                amplitude,
                wavenumber,
            } => {
                let phase = wavenumber.dot(&x);
                let t = angle + amplitude * phase.sin();
                let (r, dr) = rotation(t);
                let d = Matrix2::from_diagonal(&Vector2::new(lambdas[0], lambdas[1]));
                let da_dt = dr * d * r.transpose() + r * d * dr.transpose();
                let dt = amplitude * phase.cos();
                [
                    symmetrize(da_dt * (dt * wavenumber.x)),
                    symmetrize(da_dt * (dt * wavenumber.y)),
                ]
            }
            CoefficientFamily::Holder { eps, alpha, center } => {
                let dx = x - center;
                let r = dx.norm();
                if r == 0.0 {
                    [Matrix2::zeros(); 2]
                } else {
                    let g = eps * alpha * r.powf(alpha - 2.0) * dx;
                    [Matrix2::identity() * g.x, Matrix2::identity() * g.y]
                }
            }
        };
        [d[0] * self.scale, d[1] * self.scale]
    }

    /// Column divergences `div A^j = sum_i d a_ij / d x_i`.
    pub fn column_divergence(&self, x: Point) -> Vector2<f64> {
        let [dx, dy] = self.derivatives(x);
        Vector2::new(dx[(0, 0)] + dy[(1, 0)], dx[(0, 1)] + dy[(1, 1)])
    }

    pub fn sample(&self, grid: &Grid) -> Result<MatrixField> {
        MatrixField::from_fn(grid, |x| self.matrix(x))
    }

    /// Closed-form answer to "is A in W^{1,p} near its worst point" for a
    /// planar domain: the Hölder family needs `p (1 - alpha) < 2`, the
    /// smooth families are always in. Also requires `p > 2`.
    pub fn sobolev_membership(&self, p: f64) -> bool {
        let n = 2.0;
        if p <= n {
            return false;
        }
        match &self.family {
            CoefficientFamily::Holder { eps, alpha, .. } if *eps != 0.0 && *alpha < 1.0 => p * (1.0 - alpha) < n,
            _ => true,
        }
    }
}
