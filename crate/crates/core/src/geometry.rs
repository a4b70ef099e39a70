//! Coincidence set, free boundary and the growth/detachment constants.
//!
//! The free boundary is traced by marching squares on the active mask.
//! On an edge from an active node `a` to an inactive node `b`, the crossing
//! is placed where the straight line through `sqrt(u)` at `b` and at the
//! next node beyond `b` reaches zero. Near a free-boundary point `u` grows
//! quadratically, so `sqrt(u)` is close to linear and this locates the
//! crossing to sub-cell accuracy (exactly for `1/2 (x_1)_+^2`).

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::field::{Evaluator, Grid, Point};
use crate::solve::DiscreteSolution;
use crate::{fmt9, Error, Result};

/// Angular nodes for ball and sphere suprema.
pub const ANGLES: usize = 256;
/// Radial layers for ball suprema.
pub const LAYERS: usize = 32;

#[derive(Clone, Debug)]
pub struct CoincidenceGeometry {
    pub active_mask: Vec<bool>,
    /// One point per mask edge crossing, in polyline order, followed by
    /// isolated active nodes.
    pub boundary_points: Vec<Point>,
    /// Cells `(i, j)` whose corners mix active and inactive nodes.
    pub boundary_cells: Vec<(usize, usize)>,
    /// Index ranges into `boundary_points`, with a closed flag.
    pub polylines: Vec<Polyline>,
    grid: Grid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pub start: usize,
    pub len: usize,
    pub closed: bool,
}

impl CoincidenceGeometry {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn points_of(&self, line: &Polyline) -> &[Point] {
        &self.boundary_points[line.start..line.start + line.len]
    }

    /// Nearest free-boundary point to `x` and its distance.
    pub fn snap(&self, x: Point) -> (Point, f64) {
        self.boundary_points
            .iter()
            .map(|p| (*p, (p - x).norm()))
            .fold((x, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
    }

    /// Winding number of a closed polyline around `centre`.
    pub fn winding_number(&self, line: &Polyline, centre: Point) -> i32 {
        let pts = self.points_of(line);
        let mut total = 0.0;
        for k in 0..pts.len() {
            let a = pts[k] - centre;
            let b = pts[(k + 1) % pts.len()] - centre;
            total += (a.x * b.y - a.y * b.x).atan2(a.dot(&b));
        }
        (total / std::f64::consts::TAU).round() as i32
    }
}

/// Edge between two node indices, stored with the smaller index first.
type EdgeKey = (usize, usize);

fn edge_key(a: usize, b: usize) -> EdgeKey {
    (a.min(b), a.max(b))
}

fn crossing(grid: &Grid, u: &[f64], active: &[bool], a: (usize, usize), b: (usize, usize)) -> Point {
    let pa = grid.node(a.0, a.1);
    let pb = grid.node(b.0, b.1);
    let (di, dj) = (b.0 as isize - a.0 as isize, b.1 as isize - a.1 as isize);
    let (i2, j2) = (b.0 as isize + di, b.1 as isize + dj);
    if i2 >= 0 && j2 >= 0 && (i2 as usize) < grid.nx() && (j2 as usize) < grid.ny() {
        let k2 = grid.index(i2 as usize, j2 as usize);
        if !active[k2] {
            let sb = u[grid.index(b.0, b.1)].max(0.0).sqrt();
            let slope = u[k2].max(0.0).sqrt() - sb;
            if slope > 0.0 {
                let t = (sb / slope).clamp(0.0, 1.0);
                return pb + (pa - pb) * t;
            }
        }
    }
    (pa + pb) * 0.5
}

/// Traces the interface of the active mask.
pub fn extract_free_boundary(solution: &DiscreteSolution) -> Result<CoincidenceGeometry> {
    let grid = solution.grid().clone();
    let active = &solution.active;
    let count = active.iter().filter(|a| **a).count();
    if count == 0 {
        return Err(Error::NoFreeBoundary("the active set is empty".into()));
    }
    if count == active.len() {
        return Err(Error::NoFreeBoundary("every node is active".into()));
    }
    let u = solution.u.values();
    let (nx, ny) = (grid.nx(), grid.ny());

    let mut cells = Vec::new();
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    let mut points: HashMap<EdgeKey, Point> = HashMap::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let idx = corners.map(|(a, b)| grid.index(a, b));
            let flags = idx.map(|k| active[k]);
            if flags.iter().all(|f| *f) || flags.iter().all(|f| !*f) {
                continue;
            }
            cells.push((i, j));
            let mut crossed = Vec::with_capacity(4);
            for e in 0..4 {
                let (p, q) = (e, (e + 1) % 4);
                if flags[p] != flags[q] {
                    let key = edge_key(idx[p], idx[q]);
                    let (a, b) = if flags[p] { (corners[p], corners[q]) } else { (corners[q], corners[p]) };
                    points.entry(key).or_insert_with(|| crossing(&grid, u, active, a, b));
                    crossed.push((e, key));
                }
            }
            if crossed.len() == 2 {
                segments.push((crossed[0].1, crossed[1].1));
            } else {
                // saddle: cut off each active corner separately, corner c
                // touches edges c - 1 and c
                for c in (0..4).filter(|c| flags[*c]) {
                    let before = crossed.iter().find(|x| x.0 == (c + 3) % 4).map(|x| x.1);
                    let after = crossed.iter().find(|x| x.0 == c).map(|x| x.1);
                    if let (Some(p), Some(q)) = (before, after) {
                        segments.push((p, q));
                    }
                }
            }
        }
    }

    let mut at_edge: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, (p, q)) in segments.iter().enumerate() {
        at_edge.entry(*p).or_default().push(s);
        at_edge.entry(*q).or_default().push(s);
    }
    let other = |s: usize, e: EdgeKey| if segments[s].0 == e { segments[s].1 } else { segments[s].0 };
    let mut used = vec![false; segments.len()];
    let mut ordered = Vec::with_capacity(points.len());
    let mut polylines = Vec::new();
    // open chains first (start at edges with a single segment), then loops
    let mut starts: Vec<EdgeKey> = at_edge.iter().filter(|(_, v)| v.len() == 1).map(|(k, _)| *k).collect();
    starts.sort_unstable();
    let mut loop_starts: Vec<EdgeKey> = segments.iter().map(|s| s.0).collect();
    loop_starts.sort_unstable();
    for (start, open) in starts.into_iter().map(|s| (s, true)).chain(loop_starts.into_iter().map(|s| (s, false))) {
        let Some(&first) = at_edge[&start].iter().find(|s| !used[**s]) else {
            continue;
        };
        let begin = ordered.len();
        ordered.push(points[&start]);
        let (mut edge, mut seg) = (start, first);
        let mut closed = false;
        loop {
            used[seg] = true;
            edge = other(seg, edge);
            if edge == start {
                closed = true;
                break;
            }
            ordered.push(points[&edge]);
            match at_edge[&edge].iter().find(|s| !used[**s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        polylines.push(Polyline {
            start: begin,
            len: ordered.len() - begin,
            closed: closed && !open,
        });
    }

    // an active node without active neighbours is a contact set with no
    // interior at grid scale, so it is its own boundary
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let k = grid.index(i, j);
            let isolated = active[k]
                && [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
                    .iter()
                    .all(|&(a, b)| !active[grid.index(a, b)]);
            if isolated {
                polylines.push(Polyline {
                    start: ordered.len(),
                    len: 1,
                    closed: false,
                });
                ordered.push(grid.node(i, j));
            }
        }
    }

    Ok(CoincidenceGeometry {
        active_mask: active.clone(),
        boundary_points: ordered,
        boundary_cells: cells,
        polylines,
        grid,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    pub x0: Point,
    pub radii: Vec<f64>,
    /// `sup_{B_r} u / r^2`.
    pub sup_u_over_r2: Vec<f64>,
    /// `sup_{B_r} |grad u| / r`.
    pub sup_grad_over_r: Vec<f64>,
    /// `sup_{dB_r} u / r^2`.
    pub sphere_sup_over_r2: Vec<f64>,
    pub c_upper: f64,
    pub theta_lower: f64,
}

impl GrowthReport {
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "x0x,x0y,r,sup_u_r2,sup_grad_r,sphere_sup_r2")?;
        for k in 0..self.radii.len() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt9(self.x0.x),
                fmt9(self.x0.y),
                fmt9(self.radii[k]),
                fmt9(self.sup_u_over_r2[k]),
                fmt9(self.sup_grad_over_r[k]),
                fmt9(self.sphere_sup_over_r2[k])
            )?;
        }
        Ok(())
    }
}

/// Fails unless the closed ball `B_r(x0)` lies in the evaluator's domain.
pub fn check_ball(u: &dyn Evaluator, x0: Point, r: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(Error::Radius(format!("radius must be positive, got {r}")));
    }
    if let Some((lo, hi)) = u.domain() {
        let room = (x0.x - lo.x).min(x0.y - lo.y).min(hi.x - x0.x).min(hi.y - x0.y);
        if room < r * (1.0 - 1e-12) {
            return Err(Error::Radius(format!(
                "ball of radius {r} around ({}, {}) leaves the domain",
                x0.x, x0.y
            )));
        }
    }
    Ok(())
}

fn on_circle(x0: Point, rho: f64, k: usize) -> Point {
    let t = std::f64::consts::TAU * k as f64 / ANGLES as f64;
    x0 + Point::new(t.cos(), t.sin()) * rho
}

/// Sampled suprema of `u / r^2` and `|grad u| / r` on balls and spheres
/// around `x0`. Samples are a polar lattice, so the suprema are lower
/// bounds on the true ones.
pub fn growth_constants(u: &dyn Evaluator, x0: Point, radii: &[f64]) -> Result<GrowthReport> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument("radii must be nonempty and strictly increasing".into()));
    }
    check_ball(u, x0, *radii.last().unwrap())?;
    let rows: Vec<(f64, f64, f64)> = radii
        .par_iter()
        .map(|&r| -> Result<(f64, f64, f64)> {
            let mut ball = u.value(x0)?.max(0.0);
            let mut grad = u.jet(x0)?.grad.norm();
            let mut sphere = 0.0_f64;
            for layer in 1..=LAYERS {
                let rho = r * layer as f64 / LAYERS as f64;
                for k in 0..ANGLES {
                    let jet = u.jet(on_circle(x0, rho, k))?;
                    ball = ball.max(jet.value);
                    grad = grad.max(jet.grad.norm());
                    if layer == LAYERS {
                        sphere = sphere.max(jet.value);
                    }
                }
            }
            Ok((ball / (r * r), grad / r, sphere / (r * r)))
        })
        .collect::<Result<_>>()?;
    if rows.last().unwrap().0 <= 0.0 {
        return Err(Error::Radius(format!(
            "u vanishes on the ball of radius {} around ({}, {}); the centre is not near the free boundary",
            radii.last().unwrap(),
            x0.x,
            x0.y
        )));
    }
    let sup_u_over_r2: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let sphere_sup_over_r2: Vec<f64> = rows.iter().map(|r| r.2).collect();
    Ok(GrowthReport {
        x0,
        radii: radii.to_vec(),
        c_upper: sup_u_over_r2.iter().copied().fold(0.0, f64::max),
        theta_lower: sphere_sup_over_r2.iter().copied().fold(f64::INFINITY, f64::min),
        sup_grad_over_r: rows.iter().map(|r| r.1).collect(),
        sup_u_over_r2,
        sphere_sup_over_r2,
    })
}
