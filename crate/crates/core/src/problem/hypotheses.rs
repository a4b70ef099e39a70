//! Checks of the standing hypotheses on the data: Sobolev regularity of
//! `A`, coercivity, positivity and Dini continuity of `f`, and the
//! log-weighted (double) Dini condition.

use nalgebra::Matrix2;

use super::modulus::{dini_integral, double_dini_integral, modulus_of_continuity, Modulus};
use super::ObstacleProblem;
use crate::field::{MatrixField, ScalarField};
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct Coercivity {
    /// `max(lambda_max, 1 / lambda_min)` over nodes, at least 1.
    pub lambda: f64,
    pub pass: bool,
    /// First node (flat index) with a non-positive eigenvalue.
    pub offending_node: Option<usize>,
}

fn eigenvalues(m: &Matrix2<f64>) -> (f64, f64) {
    let (a, b, c) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    let mean = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (mean - rad, mean + rad)
}

pub fn check_coercivity(a: &MatrixField) -> Coercivity {
    let mut lambda = 1.0_f64;
    let mut offending = None;
    for (k, m) in a.values().iter().enumerate() {
        let (lo, hi) = eigenvalues(m);
        if lo <= 0.0 {
            offending.get_or_insert(k);
            continue;
        }
        lambda = lambda.max(hi).max(1.0 / lo);
    }
    Coercivity {
        lambda: if offending.is_some() { f64::INFINITY } else { lambda },
        pass: offending.is_none(),
        offending_node: offending,
    }
}

#[derive(Clone, Debug)]
pub struct HypothesisReport {
    pub lambda: f64,
    pub coercivity: Coercivity,
    /// `min f` over nodes.
    pub c0: f64,
    pub omega_f_samples: Vec<(f64, f64)>,
    pub omega_f: Modulus,
    /// `int_0^1 omega_f(t) / t dt`; `None` when divergent.
    pub dini_value: Option<f64>,
    /// `int_0^1 dt/t int_0^t omega_f(s)/s ds`; `None` when divergent.
    pub double_dini_value: Option<f64>,
    /// `int_0^1 omega_f(t) |log t|^a / t dt`; `None` when divergent.
    pub log_dini_value: Option<f64>,
    pub a: f64,
    pub pass_h1: bool,
    /// The Sobolev verdict rests on the discrete proxy alone.
    pub h1_indicative: bool,
    /// `sum |grad A|^p h^2` at `h` and at `2h`.
    pub sobolev_proxy: (f64, f64),
    pub pass_h2: bool,
    pub pass_h3: bool,
    pub pass_h4: bool,
    /// Upper bound of what node sampling can miss: `omega_f(h sqrt 2)`.
    pub sampling_slack: f64,
    pub warnings: Vec<String>,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.pass_h1 && self.pass_h2 && self.pass_h3 && self.pass_h4
    }

    /// Names of the failed hypotheses.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (ok, name) in [
            (self.pass_h1, "H1"),
            (self.pass_h2, "H2"),
            (self.pass_h3, "H3"),
            (self.pass_h4, "H4"),
        ] {
            if !ok {
                out.push(name);
            }
        }
        out
    }
}

/// Geometric `t` samples `h, 2h, 4h, ...` up to the diameter.
fn t_samples(problem: &ObstacleProblem) -> Vec<f64> {
    let h = problem.grid().spacing();
    let diam = problem.grid().diameter();
    let mut ts = vec![h, h * 2f64.sqrt()];
    let mut t = 2.0 * h;
    while t < diam {
        ts.push(t);
        t *= 2.0;
    }
    ts.push(diam);
    ts
}

/// Exact node-pair modulus for small `t`; for `t` beyond eight cells the
/// field is subsampled to at most 129 nodes per axis first, which can
/// only lower the supremum.
fn sampled_modulus(f: &ScalarField, ts: &[f64]) -> Result<Vec<(f64, f64)>> {
    let h = f.grid().spacing();
    let split = ts.partition_point(|&t| t <= 8.0 * h * (1.0 + 1e-9));
    let mut out = modulus_of_continuity(f, &ts[..split.max(1)])?;
    if split < ts.len() {
        let mut coarse = f.clone();
        while coarse.grid().nx().max(coarse.grid().ny()) > 129 {
            match coarse.coarsened() {
                Some(c) => coarse = c,
                None => break,
            }
        }
        let far = modulus_of_continuity(&coarse, &ts[split..])?;
        out.extend(far);
    }
    let mut running = 0.0_f64;
    for s in out.iter_mut() {
        running = running.max(s.1);
        s.1 = running;
    }
    Ok(out)
}

fn sobolev_proxy(a: &MatrixField, p: f64) -> f64 {
    let grid = a.grid();
    let h = grid.spacing();
    let mut total = 0.0;
    for j in 1..grid.ny() - 1 {
        for i in 1..grid.nx() - 1 {
            let dx = (a.at(i + 1, j) - a.at(i - 1, j)) / (2.0 * h);
            let dy = (a.at(i, j + 1) - a.at(i, j - 1)) / (2.0 * h);
            let norm = (dx.norm_squared() + dy.norm_squared()).sqrt();
            total += norm.powf(p) * h * h;
        }
    }
    total
}

pub fn check_hypotheses(problem: &ObstacleProblem) -> Result<HypothesisReport> {
    let n = 2.0;
    let p = problem.p();
    let mut warnings: Vec<String> = problem.warnings().to_vec();

    let fine = sobolev_proxy(problem.a(), p);
    let coarse = problem.a().coarsened().map(|c| sobolev_proxy(&c, p)).unwrap_or(fine);
    let discrete_ok = p > n && fine.is_finite() && fine <= 1.25 * coarse + 1e-12;
    let (pass_h1, h1_indicative) = match &problem.analytic().coefficients {
        Some(c) => (c.sobolev_membership(p), false),
        None => (discrete_ok, true),
    };
    if h1_indicative {
        warnings.push("Sobolev check is indicative only (discrete proxy)".into());
    }
    if p <= n {
        warnings.push(format!("Sobolev exponent {p} does not exceed the dimension"));
    }

    let coercivity = check_coercivity(problem.a());
    if let Some(k) = coercivity.offending_node {
        let (i, j) = problem.grid().ij(k);
        warnings.push(format!("coefficient matrix is not positive definite at node ({i}, {j})"));
    }

    let f = problem.f();
    let c0 = f.min();
    let ts = t_samples(problem);
    let samples = sampled_modulus(f, &ts)?;
    let omega_f = Modulus::sampled(&samples)?;
    let dini_value = dini_integral(&omega_f, 1.0, 0.0).ok();
    let double_dini_value = double_dini_integral(&omega_f, 1.0).ok();
    let log_dini_value = dini_integral(&omega_f, 1.0, problem.dini_a()).ok();
    let pass_h3 = c0 > 0.0 && dini_value.is_some();
    let pass_h4 = log_dini_value.is_some();
    if c0 <= 0.0 {
        warnings.push(format!("f is not bounded below by a positive constant (min {c0})"));
    }
    if !omega_f.eq(&Modulus::Zero) {
        warnings.push("Dini continuity of f is certified on the sampled range only".into());
    }
    let sampling_slack = omega_f.eval(problem.grid().spacing() * 2f64.sqrt());

    Ok(HypothesisReport {
        lambda: coercivity.lambda,
        pass_h2: coercivity.pass,
        coercivity,
        c0,
        omega_f_samples: samples,
        omega_f,
        dini_value,
        double_dini_value,
        log_dini_value,
        a: problem.dini_a(),
        pass_h1,
        h1_indicative,
        sobolev_proxy: (fine, coarse),
        pass_h3,
        pass_h4,
        sampling_slack,
        warnings,
    })
}
