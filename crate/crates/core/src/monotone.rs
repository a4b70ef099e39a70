//! Circle and disc quadrature, the Weiss and Monneau energies in a
//! normalized frame, Dini corrections, quasi-monotonicity verdicts and
//! the energy freezing defect.
//!
//! In a frame at `x0` (see [`crate::normalize`]) and in the plane,
//!
//! ```text
//! Phi(r) = r^-4 int_{B_r} (|grad u_L|^2 + 2 u_L) - 2 r^-5 int_{dB_r} u_L^2
//! M(r)   = r^-5 int_{dB_r} (u_L - 1/2 <Q x, x>)^2
//! ```
//!
//! `Phi + C int_0^r omega(t)/t dt` and
//! `M + C int_0^r dt/t int_0^t omega(s)/s ds` are nondecreasing for some
//! `C`, with `omega(r) = omega_f(r) + r^(1 - n/p)`. [`verdict`] measures
//! the smallest such `C` on sampled radii.

use std::f64::consts::TAU;
use std::io::Write;
use std::sync::OnceLock;

use nalgebra::Matrix2;
use rayon::prelude::*;

use crate::field::{Evaluator, Point};
use crate::normalize::NormalizedFrame;
use crate::problem::{dini_integral, double_dini_integral, Modulus};
use crate::quad::GaussLegendre;
use crate::{fmt9, Error, Result};

/// Angular nodes of circle quadrature.
pub const SPHERE_NODES: usize = 256;
/// Radial Gauss-Legendre nodes of disc quadrature.
pub const BALL_LAYERS: usize = 24;

/// A quadrature value with an error estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

/// Integrand over points of the plane.
pub type Integrand<'a> = dyn Fn(Point) -> Result<f64> + Sync + 'a;

fn trapezoid(g: &Integrand, x0: Point, r: f64, nodes: usize) -> Result<f64> {
    let mut sum = 0.0;
    for k in 0..nodes {
        let t = TAU * k as f64 / nodes as f64;
        sum += g(x0 + Point::new(t.cos(), t.sin()) * r)?;
    }
    Ok(sum * TAU * r / nodes as f64)
}

/// `int_{dB_r(x0)} g` by the trapezoid rule with `2 nodes` points; the
/// error estimate is the difference to the rule with `nodes` points.
pub fn sphere_integral(g: &Integrand, x0: Point, r: f64, nodes: usize) -> Result<Quadrature> {
    if nodes < 16 {
        return Err(Error::Argument(format!("circle quadrature needs >= 16 nodes, got {nodes}")));
    }
    if !(r > 0.0) {
        return Err(Error::Radius(format!("radius must be positive, got {r}")));
    }
    let coarse = trapezoid(g, x0, r, nodes)?;
    let fine = trapezoid(g, x0, r, 2 * nodes)?;
    Ok(Quadrature {
        value: fine,
        error: (fine - coarse).abs(),
    })
}

fn rule(n: usize) -> &'static GaussLegendre {
    static R24: OnceLock<GaussLegendre> = OnceLock::new();
    static R48: OnceLock<GaussLegendre> = OnceLock::new();
    match n {
        24 => R24.get_or_init(|| GaussLegendre::new(24)),
        _ => R48.get_or_init(|| GaussLegendre::new(48)),
    }
}

fn layered(g: &Integrand, x0: Point, r: f64, layers: usize, angles: usize) -> Result<f64> {
    let mut total = 0.0;
    for (rho, w) in rule(layers).mapped(0.0, r) {
        total += w * trapezoid(g, x0, rho, angles)?;
    }
    Ok(total)
}

/// `int_{B_r(x0)} g` by Gauss-Legendre layers of circle rules (24 x 256);
/// the error estimate is the difference to the 48 x 512 rule, whose value
/// is returned.
pub fn ball_integral(g: &Integrand, x0: Point, r: f64) -> Result<Quadrature> {
    if !(r > 0.0) {
        return Err(Error::Radius(format!("radius must be positive, got {r}")));
    }
    let coarse = layered(g, x0, r, BALL_LAYERS, SPHERE_NODES)?;
    let fine = layered(g, x0, r, 2 * BALL_LAYERS, 2 * SPHERE_NODES)?;
    Ok(Quadrature {
        value: fine,
        error: (fine - coarse).abs(),
    })
}

fn check_radius(frame: &NormalizedFrame, r: f64) -> Result<()> {
    let min = frame.min_radius(4.0);
    if r < min {
        return Err(Error::Underresolved { r, min });
    }
    if r > frame.r_max {
        return Err(Error::Radius(format!("radius {r} exceeds r_max = {}", frame.r_max)));
    }
    Ok(())
}

/// `Phi(r)` with its propagated quadrature error.
pub fn weiss_energy(frame: &NormalizedFrame, r: f64) -> Result<Quadrature> {
    check_radius(frame, r)?;
    weiss_energy_of(frame.u_l().as_ref(), r)
}

/// `Phi(r)` of an evaluator centred at the origin, without frame checks.
pub fn weiss_energy_of(u: &dyn Evaluator, r: f64) -> Result<Quadrature> {
    let vol = ball_integral(
        &|x| {
            let j = u.jet(x)?;
            Ok(j.grad.norm_squared() + 2.0 * j.value)
        },
        Point::zeros(),
        r,
    )?;
    let surf = sphere_integral(&|x| Ok(u.value(x)?.powi(2)), Point::zeros(), r, SPHERE_NODES)?;
    Ok(Quadrature {
        value: vol.value / r.powi(4) - 2.0 * surf.value / r.powi(5),
        error: vol.error / r.powi(4) + 2.0 * surf.error / r.powi(5),
    })
}

/// `2 r^-6 int_{dB_r} (<grad u_L, x> - 2 u_L)^2`.
pub fn weiss_rhs(frame: &NormalizedFrame, r: f64) -> Result<Quadrature> {
    check_radius(frame, r)?;
    weiss_rhs_of(frame.u_l().as_ref(), r)
}

pub fn weiss_rhs_of(u: &dyn Evaluator, r: f64) -> Result<Quadrature> {
    let q = sphere_integral(
        &|x| {
            let j = u.jet(x)?;
            Ok((j.grad.dot(&x) - 2.0 * j.value).powi(2))
        },
        Point::zeros(),
        r,
        SPHERE_NODES,
    )?;
    let s = 2.0 / r.powi(6);
    Ok(Quadrature {
        value: s * q.value,
        error: s * q.error,
    })
}

/// Checks that `Q` is symmetric, positive semidefinite and has unit trace.
pub fn check_profile(q: &Matrix2<f64>) -> Result<()> {
    if (q[(0, 1)] - q[(1, 0)]).abs() > 1e-12 {
        return Err(Error::Profile(format!("Q is not symmetric: {q:?}")));
    }
    if (q.trace() - 1.0).abs() > 1e-10 {
        return Err(Error::Profile(format!("trace of Q is {}, not 1", q.trace())));
    }
    let min = q.symmetric_eigenvalues().min();
    if min < -1e-12 {
        return Err(Error::Profile(format!("Q has negative eigenvalue {min}")));
    }
    Ok(())
}

/// `M(r) = r^-5 int_{dB_r} (u_L - 1/2 <Q x, x>)^2`.
pub fn monneau_value(frame: &NormalizedFrame, q: &Matrix2<f64>, r: f64) -> Result<Quadrature> {
    check_profile(q)?;
    check_radius(frame, r)?;
    monneau_value_of(frame.u_l().as_ref(), q, r)
}

pub fn monneau_value_of(u: &dyn Evaluator, q: &Matrix2<f64>, r: f64) -> Result<Quadrature> {
    check_profile(q)?;
    let s = sphere_integral(
        &|x| Ok((u.value(x)? - 0.5 * x.dot(&(q * x))).powi(2)),
        Point::zeros(),
        r,
        SPHERE_NODES,
    )?;
    Ok(Quadrature {
        value: s.value / r.powi(5),
        error: s.error / r.powi(5),
    })
}

/// `omega(r) = omega_f(r) + r^(1 - n/p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaSpec {
    pub omega_f: Modulus,
    pub n: usize,
    pub p: f64,
}

impl OmegaSpec {
    pub fn new(omega_f: Modulus, n: usize, p: f64) -> Self {
        Self { omega_f, n, p }
    }

    pub fn exponent(&self) -> f64 {
        1.0 - self.n as f64 / self.p
    }

    pub fn eval(&self, r: f64) -> f64 {
        omega(r, &self.omega_f, self.n, self.p)
    }

    pub fn modulus(&self) -> Modulus {
        Modulus::Sum(vec![
            self.omega_f.clone(),
            Modulus::Power {
                scale: 1.0,
                exponent: self.exponent(),
            },
        ])
    }
}

pub fn omega(r: f64, omega_f: &Modulus, n: usize, p: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    omega_f.eval(r) + r.powf(1.0 - n as f64 / p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    Weiss,
    Monneau,
}

impl CurveKind {
    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Weiss => "weiss",
            CurveKind::Monneau => "monneau",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyCurve {
    pub x0: Point,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub quadrature_error: Vec<f64>,
    pub kind: CurveKind,
    pub profile_q: Option<Matrix2<f64>>,
    /// Weiss right-hand side at each radius (Weiss curves only).
    pub rhs: Option<Vec<f64>>,
}

impl EnergyCurve {
    /// Curve from explicit samples (for instance closed forms).
    pub fn from_values(kind: CurveKind, radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(Error::Argument("radii and values differ in length".into()));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) || radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Argument("radii must be positive and strictly increasing".into()));
        }
        Ok(Self {
            x0: Point::zeros(),
            quadrature_error: vec![0.0; radii.len()],
            radii,
            values,
            kind,
            profile_q: None,
            rhs: None,
        })
    }
}

/// `per_octave` geometric radii per factor two from `hi` down to at least
/// `lo`, increasing.
pub fn dyadic_radii(lo: f64, hi: f64, per_octave: usize) -> Vec<f64> {
    let step = 2f64.powf(-1.0 / per_octave.max(1) as f64);
    let mut out = Vec::new();
    let mut r = hi;
    while r >= lo * (1.0 - 1e-12) {
        out.push(r);
        r *= step;
    }
    out.reverse();
    out
}

/// Radii between the resolvable scale (8 cells) and `r_max`, four per
/// octave.
pub fn default_radii(frame: &NormalizedFrame) -> Vec<f64> {
    dyadic_radii(frame.min_radius(8.0), frame.r_max, 4)
}

pub fn weiss_curve(frame: &NormalizedFrame, radii: &[f64]) -> Result<EnergyCurve> {
    let rows: Vec<(Quadrature, Quadrature)> = radii
        .par_iter()
        .map(|&r| Ok((weiss_energy(frame, r)?, weiss_rhs(frame, r)?)))
        .collect::<Result<_>>()?;
    let mut curve = EnergyCurve::from_values(CurveKind::Weiss, radii.to_vec(), rows.iter().map(|r| r.0.value).collect())?;
    curve.x0 = frame.x0;
    curve.quadrature_error = rows.iter().map(|r| r.0.error).collect();
    curve.rhs = Some(rows.iter().map(|r| r.1.value).collect());
    Ok(curve)
}

pub fn monneau_curve(frame: &NormalizedFrame, q: &Matrix2<f64>, radii: &[f64]) -> Result<EnergyCurve> {
    check_profile(q)?;
    let rows: Vec<Quadrature> = radii.par_iter().map(|&r| monneau_value(frame, q, r)).collect::<Result<_>>()?;
    let mut curve = EnergyCurve::from_values(CurveKind::Monneau, radii.to_vec(), rows.iter().map(|r| r.value).collect())?;
    curve.x0 = frame.x0;
    curve.quadrature_error = rows.iter().map(|r| r.error).collect();
    curve.profile_q = Some(*q);
    Ok(curve)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub r_lo: f64,
    pub r_hi: f64,
    pub deficit: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityReport {
    pub curve: EnergyCurve,
    pub omega: OmegaSpec,
    /// `c(r)` at each radius: the single Dini integral for Weiss curves,
    /// the double one for Monneau curves.
    pub correction: Vec<f64>,
    /// Smallest `C` making `value + C correction` nondecreasing.
    pub c_min: f64,
    /// The `C` the verdict was taken at.
    pub reference_c: f64,
    /// Intervals where the corrected curve at `reference_c` decreases by
    /// more than the quadrature error of its endpoints.
    pub violations: Vec<Violation>,
    /// Trapezoid estimate of the integral of the Weiss right-hand side
    /// over each interval (zero for Monneau curves).
    pub rhs_lower_bound: Vec<f64>,
    pub pass: bool,
    /// Value at the smallest radius, the estimate of the limit at `0+`.
    pub phi0: f64,
    /// `C_min c(r_min)` plus the quadrature error at `r_min`.
    pub phi0_uncertainty: f64,
}

impl MonotonicityReport {
    pub fn corrected(&self, c: f64) -> Vec<f64> {
        self.curve.values.iter().zip(&self.correction).map(|(v, k)| v + c * k).collect()
    }

    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "r,value,quad_err,correction,corrected_value,rhs_lower_bound")?;
        let corrected = self.corrected(self.reference_c);
        for k in 0..self.curve.radii.len() {
            let rhs = if k == 0 { 0.0 } else { self.rhs_lower_bound[k - 1] };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt9(self.curve.radii[k]),
                fmt9(self.curve.values[k]),
                fmt9(self.curve.quadrature_error[k]),
                fmt9(self.correction[k]),
                fmt9(corrected[k]),
                fmt9(rhs)
            )?;
        }
        Ok(())
    }
}

/// Measures `C_min` and checks monotonicity of the corrected curve at
/// `reference_c` (default `C_min`).
pub fn verdict(curve: &EnergyCurve, omega: &OmegaSpec, reference_c: Option<f64>) -> Result<MonotonicityReport> {
    let n = curve.radii.len();
    if n < 8 {
        return Err(Error::Argument(format!("a verdict needs at least 8 radii, got {n}")));
    }
    let modulus = omega.modulus();
    let correction: Vec<f64> = curve
        .radii
        .iter()
        .map(|&r| match curve.kind {
            CurveKind::Weiss => dini_integral(&modulus, r, 0.0),
            CurveKind::Monneau => double_dini_integral(&modulus, r),
        })
        .collect::<Result<_>>()
        .map_err(|e| match e {
            Error::Divergent(m) => Error::Hypothesis(format!("correction integral diverges ({m})")),
            other => other,
        })?;
    let v = &curve.values;
    let mut c_min = 0.0_f64;
    for i in 0..n - 1 {
        let drop = v[i] - v[i + 1];
        let dc = correction[i + 1] - correction[i];
        if drop > 0.0 {
            c_min = c_min.max(if dc > 0.0 { drop / dc } else { f64::INFINITY });
        }
    }
    let reference_c = reference_c.unwrap_or(c_min);
    let err = &curve.quadrature_error;
    let violations: Vec<Violation> = (0..n - 1)
        .filter_map(|i| {
            let deficit = (v[i] + reference_c * correction[i]) - (v[i + 1] + reference_c * correction[i + 1]);
            (deficit > err[i] + err[i + 1] + 1e-12 * v[i].abs().max(v[i + 1].abs())).then(|| Violation {
                r_lo: curve.radii[i],
                r_hi: curve.radii[i + 1],
                deficit,
            })
        })
        .collect();
    let rhs_lower_bound = match &curve.rhs {
        Some(rhs) => (0..n - 1)
            .map(|i| 0.5 * (rhs[i] + rhs[i + 1]) * (curve.radii[i + 1] - curve.radii[i]))
            .collect(),
        None => vec![0.0; n - 1],
    };
    Ok(MonotonicityReport {
        curve: curve.clone(),
        omega: omega.clone(),
        pass: violations.is_empty(),
        phi0: v[0],
        phi0_uncertainty: if c_min.is_finite() { c_min * correction[0] } else { f64::INFINITY } + err[0],
        correction,
        c_min,
        reference_c,
        violations,
        rhs_lower_bound,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FreezingReport {
    pub r: f64,
    /// `|int_{B_1} (<C(r x) grad v, grad v> + 2 (f_L(r x)/f(x0)) v)
    ///   - int_{B_1} (|grad v|^2 + 2 v)|`.
    pub lhs: f64,
    /// `(r^(1 - n/p) + omega_f(r)) int_{B_1} (|grad v|^2 + 2 v)`.
    pub rhs: f64,
    pub energy: f64,
    pub quadrature_error: f64,
    /// `lhs > rhs + quadrature_error`.
    pub exceeded: bool,
}

/// Compares the energy with frozen coefficients against the one with
/// coefficients read at scale `r`, for a nonnegative test function `v` on
/// the unit disc.
pub fn freezing_defect(frame: &NormalizedFrame, omega: &OmegaSpec, r: f64, v: &dyn Evaluator) -> Result<FreezingReport> {
    if !(r > 0.0 && r <= frame.r_max) {
        return Err(Error::Radius(format!("radius {r} outside (0, {}]", frame.r_max)));
    }
    let negative = ball_integral(&|x| Ok(v.value(x)?.min(0.0).abs()), Point::zeros(), 1.0)?;
    if negative.value > 0.0 {
        return Err(Error::Argument("test function must be nonnegative on the unit disc".into()));
    }
    let frozen = ball_integral(
        &|x| {
            let j = v.jet(x)?;
            Ok(j.grad.norm_squared() + 2.0 * j.value)
        },
        Point::zeros(),
        1.0,
    )?;
    let variable = ball_integral(
        &|x| {
            let j = v.jet(x)?;
            let (c, _) = frame.c_jet(x * r)?;
            Ok(j.grad.dot(&(c * j.grad)) + 2.0 * frame.f_ratio(x * r)? * j.value)
        },
        Point::zeros(),
        1.0,
    )?;
    let lhs = (variable.value - frozen.value).abs();
    let rhs = omega.eval(r) * frozen.value;
    let quadrature_error = variable.error + frozen.error;
    Ok(FreezingReport {
        r,
        lhs,
        rhs,
        energy: frozen.value,
        quadrature_error,
        exceeded: lhs > rhs + quadrature_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FnEvaluator, Jet};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use nalgebra::Vector2;
    use std::f64::consts::PI;

    fn half_space() -> FnEvaluator {
        FnEvaluator::new(|x: Point| {
            let s = x.x.max(0.0);
            Jet {
                value: 0.5 * s * s,
                grad: Vector2::new(s, 0.0),
                hess: Matrix2::new(if s > 0.0 { 1.0 } else { 0.0 }, 0.0, 0.0, 0.0),
            }
        })
    }

    fn quadratic(q: Matrix2<f64>) -> FnEvaluator {
        FnEvaluator::new(move |x: Point| Jet {
            value: 0.5 * x.dot(&(q * x)),
            grad: q * x,
            hess: q,
        })
    }

    #[test]
    fn circle_rules() {
        let one = sphere_integral(&|_| Ok(1.0), Point::new(0.3, 0.1), 0.5, 64).unwrap();
        assert_abs_diff_eq!(one.value, PI, epsilon = 1e-14);
        let x2 = sphere_integral(&|x| Ok(x.x * x.x), Point::zeros(), 1.0, 64).unwrap();
        assert_abs_diff_eq!(x2.value, PI, epsilon = 1e-14);
        let odd = sphere_integral(&|x| Ok(x.x), Point::zeros(), 0.7, 64).unwrap();
        assert_abs_diff_eq!(odd.value, 0.0, epsilon = 1e-14);
        assert!(sphere_integral(&|_| Ok(1.0), Point::zeros(), 1.0, 8).is_err());
    }

    #[test]
    fn disc_rules() {
        let one = ball_integral(&|_| Ok(1.0), Point::zeros(), 1.0).unwrap();
        assert_abs_diff_eq!(one.value, PI, epsilon = 1e-13);
        let r2 = ball_integral(&|x| Ok(x.norm_squared()), Point::zeros(), 1.0).unwrap();
        assert_abs_diff_eq!(r2.value, PI / 2.0, epsilon = 1e-13);
        let half = ball_integral(&|x| Ok(0.5 * x.x.max(0.0).powi(2)), Point::zeros(), 1.0).unwrap();
        assert_relative_eq!(half.value, PI / 16.0, max_relative = 1e-9);
    }

    #[test]
    fn weiss_values_of_exact_profiles() {
        for r in [0.1, 0.25, 0.5] {
            let hs = weiss_energy_of(&half_space(), r).unwrap();
            assert_relative_eq!(hs.value, PI / 16.0, max_relative = 1e-8);
            let rad = weiss_energy_of(&quadratic(Matrix2::identity() * 0.5), r).unwrap();
            assert_relative_eq!(rad.value, PI / 8.0, max_relative = 1e-10);
            assert!(weiss_rhs_of(&half_space(), r).unwrap().value <= 1e-6);
        }
        let zero = FnEvaluator::new(|_| Jet::zero());
        assert_eq!(weiss_energy_of(&zero, 0.3).unwrap().value, 0.0);
    }

    #[test]
    fn weiss_rhs_of_perturbed_half_space() {
        // <grad u, x> - 2u = 0.1 x_1^3, so the value is 2 r^-6 0.01 int cos^6 r^7
        let u = FnEvaluator::new(|x: Point| {
            let s = x.x.max(0.0);
            Jet {
                value: 0.5 * s * s + 0.1 * x.x.powi(3),
                grad: Vector2::new(s + 0.3 * x.x * x.x, 0.0),
                hess: Matrix2::zeros(),
            }
        });
        let r = 0.5;
        let expected = 2.0 * 0.01 * r * (5.0 * PI / 8.0);
        assert_relative_eq!(weiss_rhs_of(&u, r).unwrap().value, expected, max_relative = 1e-2);
    }

    #[test]
    fn monneau_values() {
        let rad = quadratic(Matrix2::identity() * 0.5);
        let q_half = Matrix2::identity() * 0.5;
        let q_axis = Matrix2::new(1.0, 0.0, 0.0, 0.0);
        for r in [0.1, 0.4] {
            assert_abs_diff_eq!(monneau_value_of(&rad, &q_half, r).unwrap().value, 0.0, epsilon = 1e-14);
            assert_relative_eq!(monneau_value_of(&rad, &q_axis, r).unwrap().value, PI / 16.0, max_relative = 1e-10);
        }
        // u = 0: the integral of (|x|^2/4)^2 over the unit circle
        let zero = FnEvaluator::new(|_| Jet::zero());
        assert_relative_eq!(monneau_value_of(&zero, &q_half, 0.3).unwrap().value, PI / 8.0, max_relative = 1e-10);
        assert!(matches!(monneau_value_of(&rad, &Matrix2::identity(), 0.3), Err(Error::Profile(_))));
        let indefinite = Matrix2::new(1.5, 0.0, 0.0, -0.5);
        assert!(matches!(check_profile(&indefinite), Err(Error::Profile(_))));
    }

    #[test]
    fn omega_examples() {
        assert_abs_diff_eq!(omega(0.5, &Modulus::Zero, 2, 4.0), 0.5_f64.sqrt(), epsilon = 1e-15);
        let lin = Modulus::Power {
            scale: 1.0,
            exponent: 1.0,
        };
        assert_abs_diff_eq!(omega(0.125, &lin, 2, 3.0), 0.625, epsilon = 1e-15);
        assert_eq!(omega(0.0, &lin, 2, 3.0), 0.0);
    }

    fn third() -> OmegaSpec {
        // omega_f = 0 and p = 3 give omega(t) = t^(1/3)
        OmegaSpec::new(Modulus::Zero, 2, 3.0)
    }

    #[test]
    fn constant_and_increasing_curves_pass_with_zero_constant() {
        let radii = dyadic_radii(0.01, 0.5, 2);
        let flat = EnergyCurve::from_values(CurveKind::Weiss, radii.clone(), vec![0.3; radii.len()]).unwrap();
        let rep = verdict(&flat, &third(), None).unwrap();
        assert_eq!(rep.c_min, 0.0);
        assert!(rep.pass);
        let up = EnergyCurve::from_values(CurveKind::Weiss, radii.clone(), radii.iter().map(|r| r * r).collect()).unwrap();
        let rep = verdict(&up, &third(), None).unwrap();
        assert_eq!(rep.c_min, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn measured_constant_of_a_cube_root_curve() {
        // value 1 - r^(1/3) against c(r) = 3 r^(1/3): C_min = 1/3
        let radii = dyadic_radii(1e-3, 0.5, 8);
        let values = radii.iter().map(|r| 1.0 - r.powf(1.0 / 3.0)).collect();
        let curve = EnergyCurve::from_values(CurveKind::Weiss, radii, values).unwrap();
        let rep = verdict(&curve, &third(), None).unwrap();
        assert_relative_eq!(rep.c_min, 1.0 / 3.0, max_relative = 0.05);
        assert!(rep.pass);
        let strict = verdict(&curve, &third(), Some(0.2)).unwrap();
        assert!(!strict.pass);
        assert_eq!(strict.violations.len(), curve.radii.len() - 1);
    }

    #[test]
    fn verdict_needs_eight_radii_and_a_convergent_correction() {
        let short = EnergyCurve::from_values(CurveKind::Weiss, vec![0.1, 0.2], vec![1.0, 1.0]).unwrap();
        assert!(verdict(&short, &third(), None).is_err());
        let radii = dyadic_radii(0.01, 0.5, 2);
        let flat = EnergyCurve::from_values(CurveKind::Monneau, radii.clone(), vec![0.3; radii.len()]).unwrap();
        let critical = OmegaSpec::new(Modulus::Zero, 2, 2.0);
        assert!(matches!(verdict(&flat, &critical, None), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn radii_are_geometric_and_increasing() {
        let r = dyadic_radii(0.1, 0.8, 4);
        assert_eq!(r.len(), 13);
        assert_abs_diff_eq!(r[0], 0.1, epsilon = 1e-12);
        assert_eq!(*r.last().unwrap(), 0.8);
        assert!(r.windows(2).all(|w| w[1] > w[0]));
    }
}
