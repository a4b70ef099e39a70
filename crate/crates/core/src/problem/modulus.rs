//! Moduli of continuity and their (log-weighted) Dini integrals.

use rayon::prelude::*;

use crate::field::ScalarField;
use crate::quad;
use crate::{Error, Result};

/// A modulus of continuity `t -> omega(t)` on `t > 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum Modulus {
    Zero,
    /// `scale * t^exponent`.
    Power { scale: f64, exponent: f64 },
    /// Piecewise-linear through samples, extended below the first sample
    /// by a power law fitted to the first positive samples and held
    /// constant beyond the last one.
    Sampled {
        t: Vec<f64>,
        omega: Vec<f64>,
        tail: Option<(f64, f64)>,
    },
    Sum(Vec<Modulus>),
}

impl Modulus {
    /// Builds a sampled modulus; `samples` must be sorted by `t`.
    pub fn sampled(samples: &[(f64, f64)]) -> Result<Modulus> {
        if samples.is_empty() {
            return Err(Error::Argument("a sampled modulus needs samples".into()));
        }
        if samples.iter().all(|&(_, w)| w == 0.0) {
            return Ok(Modulus::Zero);
        }
        let positive: Vec<(f64, f64)> = samples.iter().copied().filter(|&(_, w)| w > 0.0).take(3).collect();
        let tail = if positive.len() >= 2 {
            let (xs, ys): (Vec<f64>, Vec<f64>) = positive.iter().map(|&(t, w)| (t.ln(), w.ln())).unzip();
            let (slope, intercept) = least_squares_line(&xs, &ys);
            Some((intercept.exp(), slope))
        } else {
            // one positive sample: assume linear decay to zero
            let (t, w) = positive[0];
            Some((w / t, 1.0))
        };
        Ok(Modulus::Sampled {
            t: samples.iter().map(|s| s.0).collect(),
            omega: samples.iter().map(|s| s.1).collect(),
            tail,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Modulus::Zero => 0.0,
            Modulus::Power { scale, exponent } => scale * t.powf(*exponent),
            Modulus::Sampled { t: ts, omega, tail } => {
                if t < ts[0] {
                    // first sample may be zero: then the field is flat below it
                    if omega[0] == 0.0 {
                        return 0.0;
                    }
                    return match tail {
                        Some((c, e)) => c * t.powf(*e),
                        None => 0.0,
                    };
                }
                let k = ts.partition_point(|&s| s <= t);
                if k >= ts.len() {
                    return *omega.last().expect("non-empty samples");
                }
                let (t0, t1) = (ts[k - 1], ts[k]);
                let (w0, w1) = (omega[k - 1], omega[k]);
                w0 + (w1 - w0) * (t - t0) / (t1 - t0)
            }
            Modulus::Sum(parts) => parts.iter().map(|m| m.eval(t)).sum(),
        }
    }

    /// True when the tail below the samples does not vanish at zero.
    pub fn tail_diverges(&self) -> bool {
        match self {
            Modulus::Zero => false,
            Modulus::Power { scale, exponent } => *scale != 0.0 && *exponent <= 0.0,
            Modulus::Sampled { omega, tail, .. } => {
                omega[0] != 0.0 && tail.is_some_and(|(c, e)| c != 0.0 && e <= 0.0)
            }
            Modulus::Sum(parts) => parts.iter().any(Modulus::tail_diverges),
        }
    }
}

fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Log-log least-squares slope of `ys` against `xs`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    least_squares_line(&lx, &ly).0
}

/// `sup |f(x) - f(y)|` over node pairs with `|x - y| <= t`, for each `t`.
pub fn modulus_of_continuity(field: &ScalarField, t_samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if t_samples.is_empty() {
        return Err(Error::Argument("no t samples".into()));
    }
    if t_samples.iter().any(|t| !(*t > 0.0)) || t_samples.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Argument("t samples must be positive and sorted".into()));
    }
    let grid = field.grid();
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    let h = grid.spacing();
    let tmax = *t_samples.last().expect("non-empty");
    let values = field.values();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if lo == hi {
        return Ok(t_samples.iter().map(|&t| (t, 0.0)).collect());
    }

    let reach = ((tmax / h) * (1.0 + 1e-9)).floor() as isize;
    let mut offsets = Vec::new();
    for dj in 0..=reach.min(ny - 1) {
        for di in -reach.min(nx - 1)..=reach.min(nx - 1) {
            if dj == 0 && di <= 0 {
                continue;
            }
            let d = h * ((di * di + dj * dj) as f64).sqrt();
            if d <= tmax * (1.0 + 1e-9) {
                offsets.push((d, di, dj));
            }
        }
    }
    offsets.sort_by(|a, b| a.0.total_cmp(&b.0));
    let gaps: Vec<f64> = offsets
        .par_iter()
        .map(|&(_, di, dj)| {
            let mut m = 0.0_f64;
            for j in 0..(ny - dj) {
                let i_lo = 0.max(-di);
                let i_hi = nx.min(nx - di);
                let row = (j * nx) as usize;
                let row2 = ((j + dj) * nx) as usize;
                for i in i_lo..i_hi {
                    let a = values[row + i as usize];
                    let b = values[row2 + (i + di) as usize];
                    m = m.max((a - b).abs());
                }
            }
            m
        })
        .collect();
    let mut out = Vec::with_capacity(t_samples.len());
    let mut k = 0;
    let mut running = 0.0_f64;
    for &t in t_samples {
        while k < offsets.len() && offsets[k].0 <= t * (1.0 + 1e-9) {
            running = running.max(gaps[k]);
            k += 1;
        }
        out.push((t, running));
    }
    Ok(out)
}

/// `int_0^r omega(t) weight(t) dt / t` after the substitution
/// `t = r e^{-s}`, with `weight` expressed in `s`. Panels of doubling
/// width in `s` are added until their contribution is negligible.
fn log_integral(omega: &Modulus, r: f64, weight: &dyn Fn(f64) -> f64, what: &str) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Argument(format!("integration radius must be positive, got {r}")));
    }
    if omega.tail_diverges() {
        return Err(Error::Divergent(format!("{what}: modulus does not vanish at 0")));
    }
    let mut total = 0.0;
    let (mut a, mut width) = (0.0_f64, 1.0_f64);
    while a < 1e6 {
        if omega.eval(r * (-a).exp()) == 0.0 {
            return Ok(total);
        }
        let b = a + width;
        let mut f = |s: f64| omega.eval(r * (-s).exp()) * weight(s);
        let (panel, _) = quad::adaptive(a, b, 1e-12 * total.abs(), 1e-10, &mut f);
        total += panel;
        if panel.abs() <= 1e-12 * total.abs() && b > 4.0 {
            return Ok(total);
        }
        if !total.is_finite() {
            break;
        }
        a = b;
        width *= 2.0;
    }
    Err(Error::Divergent(format!("{what}: partial integrals are not Cauchy")))
}

/// `int_0^r omega(t) |log t|^a / t dt`.
pub fn dini_integral(omega: &Modulus, r: f64, log_power: f64) -> Result<f64> {
    if log_power < 0.0 {
        return Err(Error::Argument(format!("log power must be >= 0, got {log_power}")));
    }
    let lr = r.ln();
    if log_power == 0.0 {
        return log_integral(omega, r, &|_| 1.0, "Dini integral");
    }
    log_integral(omega, r, &|s| (lr - s).abs().powf(log_power), "Dini integral")
}

/// `int_0^r dt/t int_0^t omega(s)/s ds`.
pub fn double_dini_integral(omega: &Modulus, r: f64) -> Result<f64> {
    log_integral(omega, r, &|s| s, "double Dini integral")
}
