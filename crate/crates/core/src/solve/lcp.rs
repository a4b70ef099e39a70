//! Solvers for the complementarity problem
//!
//! ```text
//! u >= 0,  w = K u - b >= 0,  u_i w_i = 0
//! ```
//!
//! with `K` symmetric positive definite; equivalently, minimizing
//! `1/2 u^T K u - b^T u` over `u >= 0`.

use super::sparse::{pcg, preconditioner, Csr};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct LcpSolution {
    pub u: Vec<f64>,
    pub iterations: usize,
}

/// `1/2 u^T K u - b^T u`.
pub fn energy(k: &Csr, b: &[f64], u: &[f64]) -> f64 {
    (0..k.n()).map(|i| u[i] * (0.5 * k.row_dot(i, u) - b[i])).sum()
}

/// `max_i |min(u_i, w_i / K_ii)|`, in the units of `u`.
pub fn natural_residual(k: &Csr, b: &[f64], u: &[f64]) -> f64 {
    (0..k.n())
        .map(|i| {
            let w = k.row_dot(i, u) - b[i];
            u[i].min(w / k.diag(i)).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug)]
pub struct PsorOptions {
    pub omega: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for PsorOptions {
    fn default() -> Self {
        Self {
            omega: 1.6,
            tol: 1e-10,
            max_sweeps: 1_000_000,
        }
    }
}

/// Projected SOR in natural order. Stops when the largest update is below
/// `tol` and the geometric tail implied by the observed contraction rate
/// is below `tol` as well. `trace`, when given, receives the energy after
/// every sweep.
pub fn psor(k: &Csr, b: &[f64], mut u: Vec<f64>, opts: PsorOptions, mut trace: Option<&mut Vec<f64>>) -> Result<LcpSolution> {
    if !(opts.omega > 0.0 && opts.omega < 2.0) {
        return Err(Error::Argument(format!("relaxation must lie in (0, 2), got {}", opts.omega)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    for v in u.iter_mut() {
        *v = v.max(0.0);
    }
    let mut previous = f64::INFINITY;
    let mut rate = 0.0_f64;
    for sweep in 1..=opts.max_sweeps {
        let mut update = 0.0_f64;
        for i in 0..k.n() {
            let r = b[i] - k.row_dot(i, &u);
            let new = (u[i] + opts.omega * r / k.diag(i)).max(0.0);
            update = update.max((new - u[i]).abs());
            u[i] = new;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(energy(k, b, &u));
        }
        if previous.is_finite() && previous > 0.0 {
            rate = 0.9 * rate + 0.1 * (update / previous).min(0.999_999);
        }
        previous = update;
        let tail = if rate > 0.0 { update * rate / (1.0 - rate) } else { 0.0 };
        if update <= opts.tol && tail <= opts.tol {
            return Ok(LcpSolution { u, iterations: sweep });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_sweeps,
        residual: previous,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct ActiveSetOptions {
    pub tol: f64,
    /// Stopping threshold on the max-norm of the linear residual.
    pub linear_tol: f64,
}

/// Primal-dual active set iteration: the active set is
/// `{ w_i / K_ii - u_i > 0 }`, the inactive block is solved by
/// preconditioned conjugate gradients warm-started from the previous
/// iterate. Terminates when the set repeats or the natural residual is
/// below `tol`.
pub fn active_set(k: &Csr, b: &[f64], mut u: Vec<f64>, opts: ActiveSetOptions) -> Result<LcpSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let n = k.n();
    let cap = n.max(10);
    let mut active: Option<Vec<bool>> = None;
    for it in 1..=cap {
        let next: Vec<bool> = (0..n)
            .map(|i| {
                let w = k.row_dot(i, &u) - b[i];
                w / k.diag(i) - u[i] > 0.0
            })
            .collect();
        if active.as_ref() == Some(&next) {
            for v in u.iter_mut() {
                *v = v.max(0.0);
            }
            return Ok(LcpSolution { u, iterations: it - 1 });
        }
        let free: Vec<usize> = (0..n).filter(|&i| !next[i]).collect();
        for (i, &a) in next.iter().enumerate() {
            if a {
                u[i] = 0.0;
            }
        }
        if !free.is_empty() {
            let sub = k.submatrix(&free);
            let rhs: Vec<f64> = free.iter().map(|&i| b[i]).collect();
            let mut x: Vec<f64> = free.iter().map(|&i| u[i]).collect();
            let m = preconditioner(&sub);
            let max_iter = 20 * ((free.len() as f64).sqrt() as usize) + 1000;
            let out = pcg(&sub, &rhs, &mut x, m.as_ref(), opts.linear_tol, max_iter);
            if !out.converged && out.residual > 100.0 * opts.linear_tol {
                return Err(Error::NonConvergence {
                    iterations: out.iterations,
                    residual: out.residual,
                });
            }
            for (&i, v) in free.iter().zip(x) {
                u[i] = v;
            }
        }
        active = Some(next);
        if u.iter().all(|v| *v >= 0.0) && natural_residual(k, b, &u) <= opts.tol {
            return Ok(LcpSolution { u, iterations: it });
        }
    }
    Err(Error::Cycling { iterations: cap })
}
