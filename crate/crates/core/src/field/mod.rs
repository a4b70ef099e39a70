//! Structured-grid fields on axis-aligned boxes.
//!
//! A [`Grid`] has the same spacing on both axes. Node `(i, j)` sits at
//! `origin + (i h, j h)` and is stored at flat index `j * nx + i`
//! (row-major, `x` fastest).

mod eval;
mod interp;
mod io;

use nalgebra::{Matrix2, Vector2};

use crate::{Error, Result};

pub use eval::{Evaluator, FieldEvaluator, FnEvaluator, Jet};
pub use interp::Order;
pub use io::{read_field, read_solution_dump, write_field, write_solution_dump};

/// A point of the plane.
pub type Point = Vector2<f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    origin: Point,
    spacing: f64,
    nx: usize,
    ny: usize,
}

impl Grid {
    /// Grid with `nx` nodes along `x`; the node count along `y` follows
    /// from the extent and must come out integral.
    pub fn new(origin: Point, extent: Vector2<f64>, nx: usize) -> Result<Self> {
        if !(extent.x > 0.0 && extent.y > 0.0) || !extent.iter().all(|e| e.is_finite()) {
            return Err(Error::Argument(format!("grid extent must be positive, got {extent:?}")));
        }
        if nx < 3 {
            return Err(Error::Argument(format!("grid needs at least 3 nodes per axis, got {nx}")));
        }
        let spacing = extent.x / (nx - 1) as f64;
        let cells_y = extent.y / spacing;
        let ny_cells = cells_y.round();
        if (cells_y - ny_cells).abs() > 1e-9 * cells_y.max(1.0) {
            return Err(Error::Argument(format!(
                "extent {:?} is incompatible with uniform spacing {spacing}",
                extent
            )));
        }
        Self::with_spacing(origin, spacing, nx, ny_cells as usize + 1)
    }

    /// Square grid `[lo, hi]^2` with `res` nodes per axis.
    pub fn square(lo: f64, hi: f64, res: usize) -> Result<Self> {
        Self::new(Point::new(lo, lo), Vector2::new(hi - lo, hi - lo), res)
    }

    pub fn with_spacing(origin: Point, spacing: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::Argument(format!("grid needs at least 3 nodes per axis, got {nx}x{ny}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Argument(format!("grid spacing must be positive, got {spacing}")));
        }
        Ok(Self { origin, spacing, nx, ny })
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Space dimension of the grid.
    pub fn dim(&self) -> usize {
        2
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn extent(&self) -> Vector2<f64> {
        Vector2::new((self.nx - 1) as f64, (self.ny - 1) as f64) * self.spacing
    }

    pub fn upper(&self) -> Point {
        self.origin + self.extent()
    }

    pub fn diameter(&self) -> f64 {
        self.extent().norm()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + i as f64 * self.spacing,
            self.origin.y + j as f64 * self.spacing,
        )
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    /// True when `p` lies in the closed bounding box (up to rounding).
    pub fn contains(&self, p: Point) -> bool {
        let tol = 1e-12 * self.diameter();
        let hi = self.upper();
        p.x >= self.origin.x - tol && p.x <= hi.x + tol && p.y >= self.origin.y - tol && p.y <= hi.y + tol
    }

    /// Distance from `p` to the boundary of the box (negative outside).
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        let hi = self.upper();
        (p.x - self.origin.x).min(hi.x - p.x).min(p.y - self.origin.y).min(hi.y - p.y)
    }

    /// Index of the node closest to `p`, clamped to the grid.
    pub fn nearest_node(&self, p: Point) -> (usize, usize) {
        let t = (p - self.origin) / self.spacing;
        let i = t.x.round().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = t.y.round().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    /// Grid with every other node, when the node counts allow it.
    pub fn coarsened(&self) -> Option<Grid> {
        if (self.nx - 1) % 2 != 0 || (self.ny - 1) % 2 != 0 || self.nx < 5 || self.ny < 5 {
            return None;
        }
        Some(Grid {
            origin: self.origin,
            spacing: 2.0 * self.spacing,
            nx: (self.nx - 1) / 2 + 1,
            ny: (self.ny - 1) / 2 + 1,
        })
    }
}

/// One real value per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Argument(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("non-finite field value at node {k}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(Point) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                values.push(f(grid.node(i, j)));
            }
        }
        Self::new(grid.clone(), values)
    }

    pub fn constant(grid: &Grid, c: f64) -> Result<Self> {
        Self::new(grid.clone(), vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Interpolated value at `p`.
    pub fn interpolate(&self, p: Point, order: Order) -> Result<f64> {
        match order {
            Order::Linear => interp::bilinear(self, p),
            Order::Cubic => Ok(interp::cubic_jet(self, p, None)?.value),
        }
    }

    /// Value, gradient and Hessian of the cubic interpolant at `p`.
    pub fn jet(&self, p: Point) -> Result<Jet> {
        interp::cubic_jet(self, p, None)
    }

    /// Like [`ScalarField::jet`], but the interpolation stencils avoid
    /// straddling nodes flagged in `mask` (see [`interp`] for the rule).
    pub fn jet_masked(&self, p: Point, mask: &[bool]) -> Result<Jet> {
        if mask.len() != self.grid.len() {
            return Err(Error::Argument("mask length does not match the grid".into()));
        }
        interp::cubic_jet(self, p, Some(mask))
    }

    /// Gradient of the cubic interpolant; `p` must keep a distance of at
    /// least one cell from the boundary.
    pub fn gradient(&self, p: Point) -> Result<Vector2<f64>> {
        let h = self.grid.spacing();
        if self.grid.distance_to_boundary(p) < h * (1.0 - 1e-9) {
            return Err(Error::OutOfBounds {
                point: p,
                reason: format!("gradient needs distance >= {h} from the boundary"),
            });
        }
        Ok(self.jet(p)?.grad)
    }

    /// Samples every other node; `None` when the grid cannot be halved.
    pub fn coarsened(&self) -> Option<ScalarField> {
        let coarse = self.grid.coarsened()?;
        let mut values = Vec::with_capacity(coarse.len());
        for j in 0..coarse.ny() {
            for i in 0..coarse.nx() {
                values.push(self.at(2 * i, 2 * j));
            }
        }
        Some(ScalarField { grid: coarse, values })
    }
}

/// One symmetric 2x2 matrix per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    grid: Grid,
    values: Vec<Matrix2<f64>>,
}

impl MatrixField {
    pub fn new(grid: Grid, values: Vec<Matrix2<f64>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Argument(format!(
                "matrix field has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        for (k, m) in values.iter().enumerate() {
            if !m.iter().all(|v| v.is_finite()) {
                return Err(Error::Argument(format!("non-finite matrix entry at node {k}")));
            }
            if m[(0, 1)] != m[(1, 0)] {
                return Err(Error::Argument(format!("matrix at node {k} is not symmetric")));
            }
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(Point) -> Matrix2<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                values.push(f(grid.node(i, j)));
            }
        }
        Self::new(grid.clone(), values)
    }

    pub fn constant(grid: &Grid, m: Matrix2<f64>) -> Result<Self> {
        Self::new(grid.clone(), vec![m; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Matrix2<f64>] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Matrix2<f64> {
        self.values[self.grid.index(i, j)]
    }

    /// Scalar field of entry `(r, c)`.
    pub fn component(&self, r: usize, c: usize) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|m| m[(r, c)]).collect(),
        }
    }

    /// Cubic interpolation of each entry and of its first derivatives.
    /// Returns `A(p)` and `[dA/dx, dA/dy]`.
    pub fn jet(&self, p: Point) -> Result<(Matrix2<f64>, [Matrix2<f64>; 2])> {
        let mut a = Matrix2::zeros();
        let mut dx = Matrix2::zeros();
        let mut dy = Matrix2::zeros();
        for (r, c) in [(0, 0), (0, 1), (1, 1)] {
            let jet = self.component(r, c).jet(p)?;
            a[(r, c)] = jet.value;
            dx[(r, c)] = jet.grad.x;
            dy[(r, c)] = jet.grad.y;
        }
        for m in [&mut a, &mut dx, &mut dy] {
            m[(1, 0)] = m[(0, 1)];
        }
        Ok((a, [dx, dy]))
    }

    pub fn coarsened(&self) -> Option<MatrixField> {
        let coarse = self.grid.coarsened()?;
        let mut values = Vec::with_capacity(coarse.len());
        for j in 0..coarse.ny() {
            for i in 0..coarse.nx() {
                values.push(self.at(2 * i, 2 * j));
            }
        }
        Some(MatrixField { grid: coarse, values })
    }
}

/// Column-wise divergence `div A^j = sum_i d a_ij / d x_i`, one field per
/// column. Centered differences inside, second-order one-sided
/// differences on boundary nodes.
pub fn divergence_of_matrix_columns(field: &MatrixField) -> [ScalarField; 2] {
    let grid = field.grid();
    let h = grid.spacing();
    let (nx, ny) = (grid.nx(), grid.ny());
    let deriv = |line: &dyn Fn(usize) -> f64, k: usize, n: usize| -> f64 {
        if k == 0 {
            // written in differences so constants cancel exactly
            (4.0 * (line(1) - line(0)) - (line(2) - line(0))) / (2.0 * h)
        } else if k + 1 == n {
            (4.0 * (line(n - 1) - line(n - 2)) - (line(n - 1) - line(n - 3))) / (2.0 * h)
        } else {
            (line(k + 1) - line(k - 1)) / (2.0 * h)
        }
    };
    let mut out = [vec![0.0; grid.len()], vec![0.0; grid.len()]];
    for j in 0..ny {
        for i in 0..nx {
            for (col, values) in out.iter_mut().enumerate() {
                let d1 = deriv(&|k| field.at(k, j)[(0, col)], i, nx);
                let d2 = deriv(&|k| field.at(i, k)[(1, col)], j, ny);
                values[grid.index(i, j)] = d1 + d2;
            }
        }
    }
    let [c0, c1] = out;
    [
        ScalarField { grid: grid.clone(), values: c0 },
        ScalarField { grid: grid.clone(), values: c1 },
    ]
}
