//! Discretization of the reduced energy and the complementarity solvers.
//!
//! After the reduction `u = w - psi` the discrete problem is: minimize
//! `1/2 u^T K u - b^T u` over `u >= 0` on interior nodes, where `K` is the
//! interior block of the cell stencil (see [`Stencil`]) and
//! `b = -f h^2 - K_IB u_B` carries the boundary values `u_B = g - psi`.
//! The multiplier `K u - b` equals `h^2 (f - div_h(A grad u))` and is
//! nonnegative at a solution.

mod lcp;
mod sparse;
mod stencil;

use std::sync::Arc;

use crate::field::{write_solution_dump, Evaluator, FieldEvaluator, FnEvaluator, Grid, Jet, ScalarField};
use crate::problem::ObstacleProblem;
use crate::{Error, Result};

pub use lcp::{active_set, energy, natural_residual, psor, ActiveSetOptions, LcpSolution, PsorOptions};
pub use sparse::{pcg, preconditioner, CgOutcome, Csr, IncompleteCholesky, Jacobi, Preconditioner};
pub use stencil::Stencil;

#[derive(Clone, Debug)]
pub struct DiscreteSystem {
    grid: Grid,
    stencil: Stencil,
    stiffness: Csr,
    load: Vec<f64>,
    /// Node index of each unknown.
    unknowns: Vec<usize>,
    /// `g - psi` on boundary nodes, zero inside.
    boundary_values: Vec<f64>,
    f: Vec<f64>,
    psi: ScalarField,
    /// Lower bound on the smallest eigenvalue of `K`.
    lambda_min: f64,
}

/// Assembles the stiffness matrix and load of the reduced problem.
pub fn assemble(problem: &ObstacleProblem) -> Result<DiscreteSystem> {
    let grid = problem.grid().clone();
    let stencil = Stencil::from_problem(problem);
    let (nx, ny) = (grid.nx(), grid.ny());
    let h2 = grid.spacing() * grid.spacing();

    let mut boundary_values = vec![0.0; grid.len()];
    let mut unknown_of = vec![usize::MAX; grid.len()];
    let mut unknowns = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let k = grid.index(i, j);
            if grid.is_boundary(i, j) {
                boundary_values[k] = problem.g().at(i, j) - problem.psi().at(i, j);
            } else {
                unknown_of[k] = unknowns.len();
                unknowns.push(k);
            }
        }
    }

    let f = problem.f().values().to_vec();
    let rows: Vec<(Vec<(usize, f64)>, f64)> = {
        use rayon::prelude::*;
        unknowns
            .par_iter()
            .map(|&node| {
                let (i, j) = grid.ij(node);
                let w = stencil.row(i, j);
                let mut row = Vec::with_capacity(9);
                let mut b = -f[node] * h2;
                for (dy, wr) in w.iter().enumerate() {
                    for (dx, &wv) in wr.iter().enumerate() {
                        if wv == 0.0 && !(dx == 1 && dy == 1) {
                            continue;
                        }
                        let nb = grid.index(i + dx - 1, j + dy - 1);
                        match unknown_of[nb] {
                            usize::MAX => b -= wv * boundary_values[nb],
                            c => row.push((c, wv)),
                        }
                    }
                }
                (row, b)
            })
            .collect()
    };
    for (r, (row, _)) in rows.iter().enumerate() {
        let d = row.iter().find(|e| e.0 == r).map_or(0.0, |e| e.1);
        if !(d > 0.0) {
            let (i, j) = grid.ij(unknowns[r]);
            return Err(Error::Assembly { i, j });
        }
    }
    let (rows, load): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let stiffness = Csr::from_rows(rows);

    let extent = grid.extent();
    let mu = stencil.min_eigenvalue().max(0.0);
    let lambda_min = mu * h2 * std::f64::consts::PI.powi(2) * (1.0 / extent.x.powi(2) + 1.0 / extent.y.powi(2));

    Ok(DiscreteSystem {
        grid,
        stencil,
        stiffness,
        load,
        unknowns,
        boundary_values,
        f,
        psi: problem.psi().clone(),
        lambda_min,
    })
}

impl DiscreteSystem {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    pub fn stiffness(&self) -> &Csr {
        &self.stiffness
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn boundary_values(&self) -> &[f64] {
        &self.boundary_values
    }

    /// Zero obstacle of the reduced problem, one entry per unknown.
    pub fn obstacle_vector(&self) -> Vec<f64> {
        vec![0.0; self.unknowns.len()]
    }

    pub fn unknowns(&self) -> &[usize] {
        &self.unknowns
    }

    /// Full-grid vector from interior values.
    pub fn expand(&self, interior: &[f64]) -> Vec<f64> {
        let mut full = self.boundary_values.clone();
        for (&node, v) in self.unknowns.iter().zip(interior) {
            full[node] = *v;
        }
        full
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.unknowns.iter().map(|&k| full[k]).collect()
    }

    /// Max-norm residual target for linear solves giving an error of at
    /// most `tol` in `u`: the inverse of `K` is bounded in max norm by
    /// `min(Lx, Ly)^2 / (8 mu h^2)` with `mu` the smallest coefficient
    /// eigenvalue.
    fn linear_tol(&self, tol: f64) -> f64 {
        let e = self.grid.extent();
        let l = e.x.min(e.y);
        let mu = self.stencil.min_eigenvalue();
        let h2 = self.grid.spacing().powi(2);
        (tol * 8.0 * mu * h2 / (l * l)).max(1e-17)
    }

    /// Solution of the unconstrained linear system (no sign constraint).
    pub fn unconstrained(&self, tol: f64) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.unknowns.len()];
        let m = preconditioner(&self.stiffness);
        let max_iter = 20 * ((x.len() as f64).sqrt() as usize) + 1000;
        let out = pcg(&self.stiffness, &self.load, &mut x, m.as_ref(), self.linear_tol(tol), max_iter);
        if !out.converged {
            return Err(Error::NonConvergence {
                iterations: out.iterations,
                residual: out.residual,
            });
        }
        Ok(x)
    }

    /// Discrete energy `u^T K u + 2 h^2 sum f u` of a full-grid `u`.
    pub fn energy_value(&self, u: &[f64]) -> f64 {
        let ku = self.stencil.apply(u);
        let h2 = self.grid.spacing().powi(2);
        let quad: f64 = u.iter().zip(&ku).map(|(a, b)| a * b).sum();
        let lin: f64 = self.unknowns.iter().map(|&k| self.f[k] * u[k]).sum();
        quad + 2.0 * h2 * lin
    }

    pub fn lambda_min_estimate(&self) -> f64 {
        self.lambda_min
    }

    fn finish(&self, interior: Vec<f64>, iterations: usize, method: Method) -> DiscreteSolution {
        let mut interior = interior;
        let diam2 = self.grid.diameter().powi(2);
        let threshold = 1e-12 * diam2;
        for v in interior.iter_mut() {
            *v = v.max(0.0);
            if *v < threshold {
                *v = 0.0;
            }
        }
        let residual = natural_residual(&self.stiffness, &self.load, &interior);
        let full = self.expand(&interior);
        // boundary nodes where the data touch the obstacle belong to the
        // contact set as well
        let active: Vec<bool> = full.iter().map(|v| *v < threshold).collect();
        let energy_value = self.energy_value(&full);
        DiscreteSolution {
            u: ScalarField::new(self.grid.clone(), full).expect("finite solution"),
            active,
            complementarity_residual: residual,
            energy_value,
            iterations,
            method,
            psi: self.psi.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Psor,
    ActiveSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialGuess {
    Zero,
    /// Positive part of the unconstrained solve.
    Unconstrained,
    /// Solve on successively coarsened grids and interpolate upwards.
    Nested,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Target accuracy in the units of `u`.
    pub tol: f64,
    pub omega: f64,
    pub max_sweeps: usize,
    pub initial: InitialGuess,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            omega: 1.6,
            max_sweeps: 1_000_000,
            initial: InitialGuess::Nested,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    pub u: ScalarField,
    /// `u = 0` at the node after the tie-break `u < 1e-12 diam^2`; boundary
    /// nodes are flagged by the same rule applied to `g - psi`.
    pub active: Vec<bool>,
    /// `max |min(u_i, w_i / K_ii)|` over interior nodes, units of `u`.
    pub complementarity_residual: f64,
    pub energy_value: f64,
    pub iterations: usize,
    pub method: Method,
    psi: ScalarField,
}

impl DiscreteSolution {
    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// Contact-aware cubic evaluator of `u`.
    pub fn evaluator(&self) -> FieldEvaluator {
        FieldEvaluator::masked(Arc::new(self.u.clone()), Arc::new(self.active.clone())).expect("matching grid")
    }

    /// `w = u + psi` at the nodes.
    pub fn w(&self) -> ScalarField {
        let v = self.u.values().iter().zip(self.psi.values()).map(|(a, b)| a + b).collect();
        ScalarField::new(self.u.grid().clone(), v).expect("finite")
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn write_dump(&self, out: &mut impl std::io::Write) -> Result<()> {
        write_solution_dump(out, &self.u, &self.active)
    }

    /// Rebuilds a solution from a dump (diagnostics are not stored).
    pub fn from_dump(u: ScalarField, active: Vec<bool>) -> Result<Self> {
        if active.len() != u.grid().len() {
            return Err(Error::Argument("active mask does not match the grid".into()));
        }
        let psi = ScalarField::constant(u.grid(), 0.0)?;
        Ok(Self {
            u,
            active,
            complementarity_residual: f64::NAN,
            energy_value: f64::NAN,
            iterations: 0,
            method: Method::ActiveSet,
            psi,
        })
    }
}

/// Exact solution as an evaluator (for oracles).
pub fn analytic_evaluator(f: impl Fn(crate::Point) -> Jet + Send + Sync + 'static) -> Arc<dyn Evaluator> {
    Arc::new(FnEvaluator::new(f))
}

/// Bilinear prolongation of a coarse full-grid vector to the grid with
/// half the spacing.
fn prolongate(coarse: &Grid, values: &[f64], fine: &Grid) -> Vec<f64> {
    let mut out = vec![0.0; fine.len()];
    for j in 0..fine.ny() {
        for i in 0..fine.nx() {
            let (ci, cj) = (i / 2, j / 2);
            let v = |a: usize, b: usize| values[coarse.index(a.min(coarse.nx() - 1), b.min(coarse.ny() - 1))];
            out[fine.index(i, j)] = match (i % 2, j % 2) {
                (0, 0) => v(ci, cj),
                (1, 0) => 0.5 * (v(ci, cj) + v(ci + 1, cj)),
                (0, 1) => 0.5 * (v(ci, cj) + v(ci, cj + 1)),
                _ => 0.25 * (v(ci, cj) + v(ci + 1, cj) + v(ci, cj + 1) + v(ci + 1, cj + 1)),
            };
        }
    }
    out
}

fn initial_guess(problem: &ObstacleProblem, system: &DiscreteSystem, opts: &SolverOptions) -> Result<Vec<f64>> {
    match opts.initial {
        InitialGuess::Zero => Ok(vec![0.0; system.unknowns().len()]),
        InitialGuess::Unconstrained => Ok(system.unconstrained(opts.tol)?.into_iter().map(|v| v.max(0.0)).collect()),
        InitialGuess::Nested => {
            let coarse = match problem.coarsen() {
                Some(c) if c.grid().nx() >= 9 && c.grid().ny() >= 9 => c,
                _ => {
                    return initial_guess(
                        problem,
                        system,
                        &SolverOptions {
                            initial: InitialGuess::Unconstrained,
                            ..*opts
                        },
                    )
                }
            };
            let coarse_sol = solve_active_set_with(&coarse, opts)?;
            let fine = prolongate(coarse.grid(), coarse_sol.u.values(), problem.grid());
            Ok(system.restrict(&fine))
        }
    }
}

/// Projected SOR on the assembled system.
pub fn solve_psor(system: &DiscreteSystem, tol: f64, omega_relax: f64) -> Result<DiscreteSolution> {
    solve_psor_from(system, vec![0.0; system.unknowns().len()], tol, omega_relax, 1_000_000)
}

pub fn solve_psor_from(
    system: &DiscreteSystem,
    start: Vec<f64>,
    tol: f64,
    omega_relax: f64,
    max_sweeps: usize,
) -> Result<DiscreteSolution> {
    let opts = PsorOptions {
        omega: omega_relax,
        tol,
        max_sweeps,
    };
    let out = psor(&system.stiffness, &system.load, start, opts, None)?;
    Ok(system.finish(out.u, out.iterations, Method::Psor))
}

/// Primal-dual active set method on the assembled system, started from
/// the positive part of the unconstrained solution.
pub fn solve_active_set(system: &DiscreteSystem, tol: f64) -> Result<DiscreteSolution> {
    let start = system.unconstrained(tol)?.into_iter().map(|v| v.max(0.0)).collect();
    solve_active_set_from(system, start, tol)
}

pub fn solve_active_set_from(system: &DiscreteSystem, start: Vec<f64>, tol: f64) -> Result<DiscreteSolution> {
    let opts = ActiveSetOptions {
        tol,
        linear_tol: system.linear_tol(tol),
    };
    let out = active_set(&system.stiffness, &system.load, start, opts)?;
    Ok(system.finish(out.u, out.iterations, Method::ActiveSet))
}

/// Assembles and solves with the active set method and the configured
/// initial guess.
pub fn solve_active_set_with(problem: &ObstacleProblem, opts: &SolverOptions) -> Result<DiscreteSolution> {
    let system = assemble(problem)?;
    let start = initial_guess(problem, &system, opts)?;
    solve_active_set_from(&system, start, opts.tol)
}

/// Assembles and solves with projected SOR and the configured initial guess.
pub fn solve_psor_with(problem: &ObstacleProblem, opts: &SolverOptions) -> Result<DiscreteSolution> {
    let system = assemble(problem)?;
    let start = initial_guess(problem, &system, opts)?;
    solve_psor_from(&system, start, opts.tol, opts.omega, opts.max_sweeps)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplementarityReport {
    /// Max over inactive interior nodes of `|div_h(A grad u) - f|`.
    pub inactive_residual: f64,
    /// Max over active nodes of the negative part of `f - div_h(A grad u)`.
    pub negative_multiplier: f64,
    pub inactive_count: usize,
    pub pass: bool,
}

/// Checks the discrete equation on inactive nodes and the sign of the
/// multiplier on active nodes, both in the units of `f`.
pub fn residual_check(system: &DiscreteSystem, solution: &DiscreteSolution, tol: f64) -> ComplementarityReport {
    let ku = system.stencil.apply(solution.u.values());
    let h2 = system.grid.spacing().powi(2);
    let mut inactive_residual = 0.0_f64;
    let mut negative_multiplier = 0.0_f64;
    let mut inactive_count = 0;
    for &k in &system.unknowns {
        let multiplier = ku[k] / h2 + system.f[k];
        if solution.active[k] {
            negative_multiplier = negative_multiplier.max(-multiplier);
        } else {
            inactive_count += 1;
            inactive_residual = inactive_residual.max(multiplier.abs());
        }
    }
    ComplementarityReport {
        inactive_residual,
        negative_multiplier,
        inactive_count,
        pass: inactive_residual <= tol && negative_multiplier <= tol && solution.u.min() >= 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{scenarios, BoundaryData, ObstacleProblem};

    fn system(spec: &crate::problem::ProblemSpec) -> (ObstacleProblem, DiscreteSystem) {
        let p = ObstacleProblem::from_spec(spec).unwrap();
        let s = assemble(&p).unwrap();
        (p, s)
    }

    #[test]
    fn stiffness_is_symmetric_and_scales_linearly() {
        let (_, s1) = system(&scenarios::rotated(17));
        assert!(s1.stiffness().is_symmetric());
        let (_, a) = system(&scenarios::half_space(9));
        let (_, b) = system(&scenarios::scaled(&scenarios::half_space(9), 2.0));
        for i in 0..a.stiffness().n() {
            let ra: Vec<_> = a.stiffness().row(i).collect();
            let rb: Vec<_> = b.stiffness().row(i).collect();
            for (x, y) in ra.iter().zip(&rb) {
                assert_eq!(x.0, y.0);
                assert_eq!(2.0 * x.1, y.1);
            }
        }
    }

    #[test]
    fn half_space_solution_is_annihilated_away_from_kink() {
        let (p, s) = system(&scenarios::half_space(33));
        let g = p.grid();
        let exact: Vec<f64> = (0..g.len()).map(|k| 0.5 * g.node(g.ij(k).0, g.ij(k).1).x.max(0.0).powi(2)).collect();
        let ku = s.stencil().apply(&exact);
        let h = g.spacing();
        for &k in s.unknowns() {
            let (i, j) = g.ij(k);
            if g.node(i, j).x > h * 1.5 {
                assert!((ku[k] / (h * h) + 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn indefinite_matrix_fails_assembly() {
        let p = ObstacleProblem::from_spec(&scenarios::indefinite(9)).unwrap();
        assert!(matches!(assemble(&p), Err(Error::Assembly { .. })));
    }

    #[test]
    fn zero_boundary_data_gives_zero_solution() {
        let mut spec = scenarios::half_space(17);
        spec.boundary = BoundaryData::Constant(0.0);
        let (_, s) = system(&spec);
        for sol in [solve_psor(&s, 1e-12, 1.6).unwrap(), solve_active_set(&s, 1e-12).unwrap()] {
            assert!(sol.u.values().iter().all(|v| *v == 0.0));
            assert_eq!(sol.complementarity_residual, 0.0);
            let report = residual_check(&s, &sol, 1e-9);
            assert!(report.pass);
            assert_eq!(report.inactive_count, 0);
        }
    }

    #[test]
    fn large_boundary_data_gives_unconstrained_solution() {
        let mut spec = scenarios::half_space(17);
        spec.boundary = BoundaryData::Constant(10.0);
        let (_, s) = system(&spec);
        let direct = s.unconstrained(1e-14).unwrap();
        for sol in [solve_psor(&s, 1e-12, 1.6).unwrap(), solve_active_set(&s, 1e-12).unwrap()] {
            assert_eq!(sol.active_count(), 0);
            let interior = s.restrict(sol.u.values());
            for (a, b) in interior.iter().zip(&direct) {
                assert!((a - b).abs() <= 1e-10 * b.abs());
            }
        }
    }
}
