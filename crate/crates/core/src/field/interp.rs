//! Bilinear and tensor-product cubic interpolation.
//!
//! The cubic interpolant uses 4-point Lagrange stencils per axis, centered
//! on the cell and shifted inwards next to the box boundary.
//!
//! With a contact mask (nodes where the field is known to vanish), the
//! 1-D rule on an interval `[i, i+1]` becomes:
//!
//! * both endpoints flagged: the interpolant is zero on the interval;
//! * node `i-1` flagged but not `i+2`: the stencil starts at `i`;
//! * node `i+2` flagged but not `i-1`: the stencil ends at `i+1`;
//! * otherwise the centered stencil.
//!
//! A field that is a polynomial of degree at most three on each side of
//! a contact region is then reproduced exactly away from the cells the
//! free boundary crosses. In 2-D the `y` direction is interpolated first
//! with a row flagged when both `x` endpoints of the cell in that row are
//! flagged; each row is then interpolated along `x` with its own flags.

use nalgebra::{Matrix2, Vector2};

use super::{Jet, Point, ScalarField};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Order {
    Linear,
    #[default]
    Cubic,
}

/// Position of `p` in index units along each axis, snapped to integers
/// within rounding so that node values are reproduced bit for bit.
fn locate(field: &ScalarField, p: Point) -> Result<(f64, f64)> {
    let grid = field.grid();
    if !p.iter().all(|c| c.is_finite()) || !grid.contains(p) {
        return Err(Error::OutOfBounds {
            point: p,
            reason: "outside the grid box".into(),
        });
    }
    let t = (p - grid.origin()) / grid.spacing();
    let snap = |t: f64, n: usize| {
        let r = t.round();
        let t = if (t - r).abs() < 1e-9 { r } else { t };
        t.clamp(0.0, (n - 1) as f64)
    };
    Ok((snap(t.x, grid.nx()), snap(t.y, grid.ny())))
}

fn cell(t: f64, n: usize) -> usize {
    (t.floor() as usize).min(n - 2)
}

pub(crate) fn bilinear(field: &ScalarField, p: Point) -> Result<f64> {
    Ok(bilinear_jet(field, p)?.value)
}

/// Bilinear value with the gradient of the cell's bilinear patch.
pub(crate) fn bilinear_jet(field: &ScalarField, p: Point) -> Result<Jet> {
    let grid = field.grid();
    let (tx, ty) = locate(field, p)?;
    let (i, j) = (cell(tx, grid.nx()), cell(ty, grid.ny()));
    let (fx, fy) = (tx - i as f64, ty - j as f64);
    let v00 = field.at(i, j);
    let v10 = field.at(i + 1, j);
    let v01 = field.at(i, j + 1);
    let v11 = field.at(i + 1, j + 1);
    let value = if fx == 0.0 && fy == 0.0 {
        v00
    } else {
        (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11)
    };
    let h = grid.spacing();
    let gx = ((1.0 - fy) * (v10 - v00) + fy * (v11 - v01)) / h;
    let gy = ((1.0 - fx) * (v01 - v00) + fx * (v11 - v10)) / h;
    let cross = (v11 - v10 - v01 + v00) / (h * h);
    Ok(Jet {
        value,
        grad: Vector2::new(gx, gy),
        hess: Matrix2::new(0.0, cross, cross, 0.0),
    })
}

/// Lagrange basis on nodes `0..m` at `s`, with first and second derivatives.
pub(crate) fn lagrange(m: usize, s: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let mut w = [0.0; 4];
    let mut d1 = [0.0; 4];
    let mut d2 = [0.0; 4];
    for k in 0..m {
        let kf = k as f64;
        let factor = |l: usize| (s - l as f64) / (kf - l as f64);
        let mut prod = 1.0;
        for l in (0..m).filter(|&l| l != k) {
            prod *= factor(l);
        }
        w[k] = prod;
        for a in (0..m).filter(|&a| a != k) {
            let mut pa = 1.0;
            for l in (0..m).filter(|&l| l != k && l != a) {
                pa *= factor(l);
            }
            d1[k] += pa / (kf - a as f64);
            for b in (0..m).filter(|&b| b != k && b != a) {
                let mut pab = 1.0;
                for l in (0..m).filter(|&l| l != k && l != a && l != b) {
                    pab *= factor(l);
                }
                d2[k] += pab / ((kf - a as f64) * (kf - b as f64));
            }
        }
    }
    (w, d1, d2)
}

enum Stencil {
    Zero,
    Start(usize),
}

fn stencil_width(n: usize) -> usize {
    n.min(4)
}

/// Stencil along one axis for the interval `[i, i+1]`.
fn stencil(i: usize, n: usize, flagged: Option<&dyn Fn(usize) -> bool>) -> Stencil {
    let m = stencil_width(n);
    let mut start = i as isize - 1;
    if let Some(flag) = flagged {
        if flag(i) && flag(i + 1) {
            return Stencil::Zero;
        }
        let left = i >= 1 && flag(i - 1);
        let right = i + 2 < n && flag(i + 2);
        if left && !right {
            start = i as isize;
        } else if right && !left {
            start = i as isize - 2;
        }
    }
    Stencil::Start(start.clamp(0, (n - m) as isize) as usize)
}

/// 1-D interpolation of `values(k)` at index position `t` in the interval
/// starting at node `i`; returns value, first and second derivative in
/// index units.
fn interp_1d(
    t: f64,
    i: usize,
    n: usize,
    values: &dyn Fn(usize) -> f64,
    flagged: Option<&dyn Fn(usize) -> bool>,
) -> (f64, f64, f64) {
    match stencil(i, n, flagged) {
        Stencil::Zero => (0.0, 0.0, 0.0),
        Stencil::Start(start) => {
            let m = stencil_width(n);
            let (w, d1, d2) = lagrange(m, t - start as f64);
            let mut out = (0.0, 0.0, 0.0);
            for k in 0..m {
                let v = values(start + k);
                out.0 += w[k] * v;
                out.1 += d1[k] * v;
                out.2 += d2[k] * v;
            }
            out
        }
    }
}

pub(crate) fn cubic_jet(field: &ScalarField, p: Point, mask: Option<&[bool]>) -> Result<Jet> {
    let grid = field.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let h = grid.spacing();
    let (tx, ty) = locate(field, p)?;
    let (ci, cj) = (cell(tx, nx), cell(ty, ny));

    let flagged = |i: usize, j: usize| mask.is_some_and(|m| m[grid.index(i, j)]);
    let row_zero = |j: usize| flagged(ci, j) && flagged(ci + 1, j);
    let row_flag: &dyn Fn(usize) -> bool = &row_zero;
    let y_flags = mask.map(|_| row_flag);

    let (val, dx, dxx, dy, dyy, dxy);
    match stencil(cj, ny, y_flags) {
        Stencil::Zero => return Ok(Jet::zero()),
        Stencil::Start(sy) => {
            let my = stencil_width(ny);
            let (wy, wy1, wy2) = lagrange(my, ty - sy as f64);
            let mut acc = [0.0; 6];
            for b in 0..my {
                let j = sy + b;
                let row = |i: usize| field.at(i, j);
                let flag_row = |i: usize| flagged(i, j);
                let x_flags: Option<&dyn Fn(usize) -> bool> = mask.map(|_| &flag_row as &dyn Fn(usize) -> bool);
                let (r0, r1, r2) = interp_1d(tx, ci, nx, &row, x_flags);
                acc[0] += wy[b] * r0;
                acc[1] += wy[b] * r1;
                acc[2] += wy[b] * r2;
                acc[3] += wy1[b] * r0;
                acc[4] += wy2[b] * r0;
                acc[5] += wy1[b] * r1;
            }
            (val, dx, dxx, dy, dyy, dxy) = (acc[0], acc[1], acc[2], acc[3], acc[4], acc[5]);
        }
    }
    Ok(Jet {
        value: val,
        grad: Vector2::new(dx, dy) / h,
        hess: Matrix2::new(dxx, dxy, dxy, dyy) / (h * h),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lagrange_basis_is_partition_of_unity() {
        for s in [0.0, 0.3, 1.5, 2.9, 3.0] {
            let (w, d1, d2) = lagrange(4, s);
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(d1.iter().sum::<f64>(), 0.0, epsilon = 1e-13);
            assert_abs_diff_eq!(d2.iter().sum::<f64>(), 0.0, epsilon = 1e-12);
            // reproduces s^2
            let q: f64 = (0..4).map(|k| w[k] * (k * k) as f64).sum();
            let dq: f64 = (0..4).map(|k| d1[k] * (k * k) as f64).sum();
            let ddq: f64 = (0..4).map(|k| d2[k] * (k * k) as f64).sum();
            assert_abs_diff_eq!(q, s * s, epsilon = 1e-12);
            assert_abs_diff_eq!(dq, 2.0 * s, epsilon = 1e-12);
            assert_abs_diff_eq!(ddq, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cubic_is_exact_on_bicubic_polynomials() {
        let g = Grid::square(-1.0, 1.0, 9).unwrap();
        let f = ScalarField::from_fn(&g, |p| p.x.powi(3) * p.y.powi(2) - 2.0 * p.x * p.y + 0.5).unwrap();
        let p = Point::new(0.31, -0.77);
        let jet = cubic_jet(&f, p, None).unwrap();
        assert_abs_diff_eq!(jet.value, p.x.powi(3) * p.y.powi(2) - 2.0 * p.x * p.y + 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(jet.grad.x, 3.0 * p.x.powi(2) * p.y.powi(2) - 2.0 * p.y, epsilon = 1e-11);
        assert_abs_diff_eq!(jet.grad.y, 2.0 * p.x.powi(3) * p.y - 2.0 * p.x, epsilon = 1e-11);
        assert_abs_diff_eq!(jet.hess[(0, 1)], 6.0 * p.x.powi(2) * p.y - 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(jet.hess[(0, 0)], 6.0 * p.x * p.y.powi(2), epsilon = 1e-10);
    }

    #[test]
    fn masked_cubic_is_exact_for_half_space_profile() {
        let g = Grid::square(-1.0, 1.0, 33).unwrap();
        let u = |p: Point| 0.5 * p.x.max(0.0).powi(2);
        let f = ScalarField::from_fn(&g, u).unwrap();
        let mask: Vec<bool> = f.values().iter().map(|v| *v == 0.0).collect();
        for p in [Point::new(0.01, 0.3), Point::new(0.04, -0.5), Point::new(-0.02, 0.1), Point::new(0.6, 0.6)] {
            let jet = cubic_jet(&f, p, Some(&mask)).unwrap();
            assert_abs_diff_eq!(jet.value, u(p), epsilon = 1e-15);
            assert_abs_diff_eq!(jet.grad.x, p.x.max(0.0), epsilon = 1e-13);
        }
        // the plain stencil straddles the kink
        let plain = cubic_jet(&f, Point::new(0.01, 0.3), None).unwrap();
        assert!((plain.value - u(Point::new(0.01, 0.3))).abs() > 1e-8);
    }
}
