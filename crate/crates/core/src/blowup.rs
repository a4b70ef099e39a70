//! Quadratic rescalings at a free-boundary point, blow-up profile fits and
//! the regular/singular classification.
//!
//! Rescalings are taken in the normalized frame, `u_r(x) = u_L(r x) / r^2`,
//! where blow-up limits solve `lap v = 1` on `{v > 0}`: either a half-space
//! profile `1/2 (<x, e>)_+^2` with Weiss energy `w_n / (4 (n + 2))` or a
//! polynomial `1/2 <Q x, x>` with `tr Q = 1` and energy `w_n / (2 (n + 2))`,
//! `w_n` the volume of the unit ball.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

use crate::field::{Evaluator, Jet, Point};
use crate::monotone::{verdict, weiss_curve, MonotonicityReport, OmegaSpec};
use crate::normalize::NormalizedFrame;
use crate::{fmt9, Error, Result};

/// Probe lattice size per axis on `[-1, 1]^2`, restricted to the unit disc.
pub const PROBES: usize = 64;
/// Half-space fit: number of golden-angle candidate directions.
pub const DIRECTIONS: usize = 360;
/// Default relative margin around the reference energies.
pub const MARGIN: f64 = 0.05;

/// `u_L(r x) / r^2`.
#[derive(Clone)]
pub struct Rescaled {
    frame: NormalizedFrame,
    r: f64,
}

impl Evaluator for Rescaled {
    fn jet(&self, x: Point) -> Result<Jet> {
        let j = self.frame.u_jet(x * self.r)?;
        Ok(Jet {
            value: j.value / (self.r * self.r),
            grad: j.grad / self.r,
            hess: j.hess,
        })
    }
}

#[derive(Clone)]
pub struct BlowupIterate {
    pub r: f64,
    pub rescaled: Rescaled,
    /// `max(sup |u_r - u_prev|, sup |grad u_r - grad u_prev|)` on the
    /// probes, when a previous iterate was given.
    pub c1_distance_to_previous: Option<f64>,
    /// `(sum |D^2 u_r|^p dA)^(1/p)` over the probes.
    pub hessian_p_norm: f64,
    /// Values and gradients at [`probes`].
    pub samples: Vec<Jet>,
}

impl std::fmt::Debug for BlowupIterate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlowupIterate")
            .field("r", &self.r)
            .field("c1_distance_to_previous", &self.c1_distance_to_previous)
            .field("hessian_p_norm", &self.hessian_p_norm)
            .finish_non_exhaustive()
    }
}

/// Lattice points of `[-1, 1]^2` (64 per axis, cell centres) inside the
/// unit disc.
pub fn probes() -> Vec<Point> {
    let step = 2.0 / PROBES as f64;
    let mut out = Vec::new();
    for j in 0..PROBES {
        for i in 0..PROBES {
            let p = Point::new(-1.0 + (i as f64 + 0.5) * step, -1.0 + (j as f64 + 0.5) * step);
            if p.norm() <= 1.0 {
                out.push(p);
            }
        }
    }
    out
}

fn sample(u: &dyn Evaluator, points: &[Point]) -> Result<Vec<Jet>> {
    points.par_iter().map(|&x| u.jet(x)).collect()
}

/// The rescaling at radius `r`; `B_{2r}` must fit in the frame and `r`
/// must cover four cells.
pub fn rescale(frame: &NormalizedFrame, r: f64, p: f64, previous: Option<&BlowupIterate>) -> Result<BlowupIterate> {
    let min = frame.min_radius(4.0);
    if r < min {
        return Err(Error::Underresolved { r, min });
    }
    if 2.0 * r > frame.r_max {
        return Err(Error::Radius(format!("B_2r with r = {r} exceeds r_max = {}", frame.r_max)));
    }
    let rescaled = Rescaled {
        frame: frame.clone(),
        r,
    };
    let points = probes();
    let samples = sample(&rescaled, &points)?;
    let cell = (2.0 / PROBES as f64).powi(2);
    let hessian_p_norm = (samples.iter().map(|j| j.hess.norm().powf(p)).sum::<f64>() * cell).powf(1.0 / p);
    let c1_distance_to_previous = previous.map(|prev| {
        samples
            .iter()
            .zip(&prev.samples)
            .map(|(a, b)| (a.value - b.value).abs().max((a.grad - b.grad).norm()))
            .fold(0.0, f64::max)
    });
    Ok(BlowupIterate {
        r,
        rescaled,
        c1_distance_to_previous,
        hessian_p_norm,
        samples,
    })
}

/// Rescalings at decreasing radii, each compared with the one before.
pub fn blowup_sequence(frame: &NormalizedFrame, radii: &[f64], p: f64) -> Result<Vec<BlowupIterate>> {
    let mut out: Vec<BlowupIterate> = Vec::with_capacity(radii.len());
    for &r in radii {
        let next = rescale(frame, r, p, out.last())?;
        out.push(next);
    }
    Ok(out)
}

/// Weiss energies of the half-space and of the polynomial profiles.
pub fn reference_energies(n: usize) -> Result<(f64, f64)> {
    let ball = match n {
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => return Err(Error::Argument(format!("reference energies are tabulated for n = 2, 3, not {n}"))),
    };
    let nf = n as f64;
    Ok((ball / (4.0 * (nf + 2.0)), ball / (2.0 * (nf + 2.0))))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitKind {
    Polynomial,
    HalfSpace,
}

impl FitKind {
    pub fn name(self) -> &'static str {
        match self {
            FitKind::Polynomial => "polynomial",
            FitKind::HalfSpace => "half_space",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileFit {
    pub kind: FitKind,
    /// Best `Q` with unit trace.
    pub q: Matrix2<f64>,
    /// Smallest eigenvalue of `Q` when below `-1e-6`.
    pub psd_violation: Option<f64>,
    pub direction: Vector2<f64>,
    /// Root mean square misfit on the probes.
    pub poly_residual: f64,
    pub half_residual: f64,
    pub residual: f64,
}

fn rms(values: &[f64], model: impl Fn(usize) -> f64) -> f64 {
    (values.iter().enumerate().map(|(k, v)| (v - model(k)).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

fn half_residual(points: &[Point], values: &[f64], theta: f64) -> f64 {
    let e = Vector2::new(theta.cos(), theta.sin());
    rms(values, |k| 0.5 * points[k].dot(&e).max(0.0).powi(2))
}

/// Least-squares fits of a unit-trace quadratic and of a half-space
/// profile to `values` at `points`.
pub fn fit_samples(points: &[Point], values: &[f64]) -> Result<ProfileFit> {
    if points.len() != values.len() || points.len() < 3 {
        return Err(Error::Argument("need at least three matching samples".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("samples are not finite".into()));
    }
    // 1/2 <Q x, x> with Q = [[a, b], [b, 1 - a]] is
    // 1/2 y^2 + a (x^2 - y^2)/2 + b x y
    let mut ata = Matrix2::zeros();
    let mut atb = Vector2::zeros();
    for (x, v) in points.iter().zip(values) {
        let row = Vector2::new(0.5 * (x.x * x.x - x.y * x.y), x.x * x.y);
        ata += row * row.transpose();
        atb += row * (v - 0.5 * x.y * x.y);
    }
    let sol = ata.lu().solve(&atb).ok_or_else(|| Error::Argument("degenerate probe set".into()))?;
    let q = Matrix2::new(sol.x, sol.y, sol.y, 1.0 - sol.x);
    let poly_residual = rms(values, |k| 0.5 * points[k].dot(&(q * points[k])));
    let min_eig = q.symmetric_eigenvalues().min();

    let golden = PI * (3.0 - 5f64.sqrt());
    let (mut best_theta, mut best) = (0.0, f64::INFINITY);
    for k in 0..DIRECTIONS {
        let theta = (k as f64 * golden) % (2.0 * PI);
        let res = half_residual(points, values, theta);
        if res < best {
            best = res;
            best_theta = theta;
        }
    }
    // golden-section refinement around the best candidate
    let width = 4.0 * PI / DIRECTIONS as f64;
    let (mut lo, mut hi) = (best_theta - width, best_theta + width);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (half_residual(points, values, c), half_residual(points, values, d));
    for _ in 0..60 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = half_residual(points, values, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = half_residual(points, values, d);
        }
    }
    let theta = 0.5 * (lo + hi);
    let refined = half_residual(points, values, theta);
    let (theta, half) = if refined <= best { (theta, refined) } else { (best_theta, best) };

    let norm = rms(values, |_| 0.0);
    if poly_residual > 0.5 * norm && half > 0.5 * norm {
        return Err(Error::NoFit { poly: poly_residual, half });
    }
    let kind = if half < poly_residual { FitKind::HalfSpace } else { FitKind::Polynomial };
    Ok(ProfileFit {
        kind,
        q,
        psd_violation: (min_eig < -1e-6).then_some(min_eig),
        direction: Vector2::new(theta.cos(), theta.sin()),
        poly_residual,
        half_residual: half,
        residual: poly_residual.min(half),
    })
}

/// Fits the iterate on the probe lattice.
pub fn fit_profile(iterate: &BlowupIterate) -> Result<ProfileFit> {
    let values: Vec<f64> = iterate.samples.iter().map(|j| j.value).collect();
    fit_samples(&probes(), &values)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Regular,
    Singular,
    Unresolved,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Regular => "regular",
            Verdict::Singular => "singular",
            Verdict::Unresolved => "unresolved",
        }
    }
}

pub fn classify(phi0: f64, uncertainty: f64, n: usize) -> Result<Verdict> {
    classify_with_margin(phi0, uncertainty, n, MARGIN)
}

/// Regular when `phi0` is within `uncertainty + margin * target` of the
/// half-space energy, singular when within that of the polynomial one;
/// unresolved when neither or both match.
pub fn classify_with_margin(phi0: f64, uncertainty: f64, n: usize, margin: f64) -> Result<Verdict> {
    let (regular, singular) = reference_energies(n)?;
    let near = |target: f64| (phi0 - target).abs() <= uncertainty + margin * target;
    Ok(match (near(regular), near(singular)) {
        (true, false) => Verdict::Regular,
        (false, true) => Verdict::Singular,
        _ => Verdict::Unresolved,
    })
}

#[derive(Clone, Debug)]
pub struct ClassificationResult {
    pub x0: Point,
    pub phi0: f64,
    pub uncertainty: f64,
    pub verdict: Verdict,
    pub fit: Option<ProfileFit>,
    pub monotonicity: MonotonicityReport,
}

/// Weiss curve on `radii`, its verdict, the classification of the limit
/// and a profile fit of the rescaling at the smallest radius `r` with
/// `2r` inside the frame.
pub fn classify_point(frame: &NormalizedFrame, omega: &OmegaSpec, radii: &[f64]) -> Result<ClassificationResult> {
    let curve = weiss_curve(frame, radii)?;
    let report = verdict(&curve, omega, None)?;
    let verdict = classify(report.phi0, report.phi0_uncertainty, omega.n)?;
    let fit_r = radii.iter().copied().find(|r| 2.0 * r <= frame.r_max);
    let fit = match fit_r {
        Some(r) => match rescale(frame, r, omega.p, None).and_then(|it| fit_profile(&it)) {
            Ok(f) => Some(f),
            Err(Error::NoFit { .. }) | Err(Error::Underresolved { .. }) => None,
            Err(e) => return Err(e),
        },
        None => None,
    };
    Ok(ClassificationResult {
        x0: frame.x0,
        phi0: report.phi0,
        uncertainty: report.phi0_uncertainty,
        verdict,
        fit,
        monotonicity: report,
    })
}

/// `x0x, x0y, phi0, unc, verdict, fit_kind, fit_residual, Q11, Q12, Q22, ex, ey`.
pub fn write_classification_csv(out: &mut impl Write, results: &[ClassificationResult]) -> Result<()> {
    writeln!(out, "x0x,x0y,phi0,unc,verdict,fit_kind,fit_residual,Q11,Q12,Q22,ex,ey")?;
    for r in results {
        let (kind, res, q, e) = match &r.fit {
            Some(f) => (f.kind.name(), fmt9(f.residual), Some(f.q), Some(f.direction)),
            None => ("none", String::new(), None, None),
        };
        let qs = q.map_or([String::new(), String::new(), String::new()], |q| [fmt9(q[(0, 0)]), fmt9(q[(0, 1)]), fmt9(q[(1, 1)])]);
        let es = match (&r.fit, e) {
            (Some(f), Some(e)) if f.kind == FitKind::HalfSpace => [fmt9(e.x), fmt9(e.y)],
            _ => [String::new(), String::new()],
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt9(r.x0.x),
            fmt9(r.x0.y),
            fmt9(r.phi0),
            fmt9(r.uncertainty),
            r.verdict.name(),
            kind,
            res,
            qs[0],
            qs[1],
            qs[2],
            es[0],
            es[1]
        )?;
    }
    Ok(())
}
