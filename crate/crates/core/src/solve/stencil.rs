//! Cell-based difference operator for `-div(A grad u)`.
//!
//! Each cell carries one coefficient matrix `[[a, b], [b, c]]` and the
//! cell energy
//!
//! ```text
//! a/2 (dx_bottom^2 + dx_top^2) + c/2 (dy_left^2 + dy_right^2)
//!   + b/2 (dx_bottom + dx_top)(dy_left + dy_right)
//! ```
//!
//! which equals `1/4 <A X, X> + (a + c)/4 m^2` with `X` the summed edge
//! differences and `m` the cell's mixed difference, so it is positive
//! semidefinite exactly when `A` is and vanishes only on constants. Its
//! Hessian summed over cells is the stiffness matrix; for `A = Id` this
//! is the 5-point Laplacian.

use nalgebra::Matrix2;
use rayon::prelude::*;

use crate::field::{Grid, Point};
use crate::problem::ObstacleProblem;

#[derive(Clone, Debug)]
pub struct Stencil {
    grid: Grid,
    /// `(a, b, c)` per cell, cell `(i, j)` at `j * (nx - 1) + i`.
    cells: Vec<[f64; 3]>,
}

/// Local 4x4 matrix of a cell in node order `(0,0), (1,0), (0,1), (1,1)`.
fn local(a: f64, b: f64, c: f64) -> [[f64; 4]; 4] {
    let (ha, hb, hc) = (0.5 * a, 0.5 * b, 0.5 * c);
    let mut m = [[0.0; 4]; 4];
    let mut edge = |p: usize, q: usize, w: f64| {
        m[p][p] += w;
        m[q][q] += w;
        m[p][q] -= w;
        m[q][p] -= w;
    };
    edge(0, 1, ha);
    edge(2, 3, ha);
    edge(0, 2, hc);
    edge(1, 3, hc);
    m[0][0] += hb;
    m[3][3] += hb;
    m[1][1] -= hb;
    m[2][2] -= hb;
    m[0][3] -= hb;
    m[3][0] -= hb;
    m[1][2] += hb;
    m[2][1] += hb;
    m
}

impl Stencil {
    /// Cell coefficients from a function evaluated at cell centres.
    pub fn from_fn(grid: &Grid, coefficient: impl Fn(Point) -> Matrix2<f64> + Sync) -> Self {
        let (cx, cy) = (grid.nx() - 1, grid.ny() - 1);
        let h = grid.spacing();
        let cells = (0..cx * cy)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % cx, k / cx);
                let centre = grid.node(i, j) + Point::new(0.5 * h, 0.5 * h);
                let m = coefficient(centre);
                [m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]]
            })
            .collect();
        Self {
            grid: grid.clone(),
            cells,
        }
    }

    /// Cell-centre values of the closed form when available, otherwise the
    /// mean of the four corner matrices.
    pub fn from_problem(problem: &ObstacleProblem) -> Self {
        let grid = problem.grid();
        if let Some(c) = &problem.analytic().coefficients {
            return Self::from_fn(grid, |x| c.matrix(x));
        }
        let a = problem.a();
        let (cx, cy) = (grid.nx() - 1, grid.ny() - 1);
        let cells = (0..cx * cy)
            .map(|k| {
                let (i, j) = (k % cx, k / cx);
                let m = (a.at(i, j) + a.at(i + 1, j) + a.at(i, j + 1) + a.at(i + 1, j + 1)) * 0.25;
                [m[(0, 0)], m[(0, 1)], m[(1, 1)]]
            })
            .collect();
        Self {
            grid: grid.clone(),
            cells,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Smallest eigenvalue over the cell matrices.
    pub fn min_eigenvalue(&self) -> f64 {
        self.cells
            .iter()
            .map(|&[a, b, c]| 0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    /// Coefficients of node `(i, j)`'s row: `w[dj + 1][di + 1]` multiplies
    /// `u(i + di, j + dj)`. Cells outside the grid are skipped.
    pub fn row(&self, i: usize, j: usize) -> [[f64; 3]; 3] {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let cx = nx - 1;
        let mut w = [[0.0; 3]; 3];
        // (cell offset, local index of the node in that cell)
        for (ox, oy, me) in [(-1isize, -1isize, 3usize), (0, -1, 2), (-1, 0, 1), (0, 0, 0)] {
            let ci = i as isize + ox;
            let cj = j as isize + oy;
            if ci < 0 || cj < 0 || ci as usize >= nx - 1 || cj as usize >= ny - 1 {
                continue;
            }
            let [a, b, c] = self.cells[cj as usize * cx + ci as usize];
            let m = local(a, b, c);
            for (other, row_val) in m[me].iter().enumerate() {
                let dx = ci + (other & 1) as isize - i as isize;
                let dy = cj + (other >> 1) as isize - j as isize;
                w[(dy + 1) as usize][(dx + 1) as usize] += row_val;
            }
        }
        w
    }

    /// `K u` on every node (boundary rows use only the cells present).
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut out = vec![0.0; grid.len()];
        out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            for (i, o) in row.iter_mut().enumerate() {
                let w = self.row(i, j);
                let mut s = 0.0;
                for (dy, wr) in w.iter().enumerate() {
                    let jj = j as isize + dy as isize - 1;
                    if jj < 0 || jj as usize >= ny {
                        continue;
                    }
                    for (dx, wv) in wr.iter().enumerate() {
                        let ii = i as isize + dx as isize - 1;
                        if *wv == 0.0 || ii < 0 || ii as usize >= nx {
                            continue;
                        }
                        s += wv * u[grid.index(ii as usize, jj as usize)];
                    }
                }
                *o = s;
            }
        });
        out
    }
}
