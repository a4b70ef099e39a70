//! One-dimensional quadrature: Gauss-Legendre rules and an adaptive
//! integrator built on them.

use std::sync::OnceLock;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule with `n` points, nodes found by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a quadrature rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, w * half))
    }
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn gl15() -> &'static GaussLegendre {
    static G15: OnceLock<GaussLegendre> = OnceLock::new();
    G15.get_or_init(|| GaussLegendre::new(15))
}

/// Adaptive integral of `f` over `[a, b]`: a 15-point rule is compared
/// with the sum of two 15-point rules on the halves, bisecting until the
/// difference drops below `max(abs_tol, rel_tol * |value|)`, the absolute
/// part split between halves. Returns the value and the accumulated error
/// estimate.
pub fn adaptive(a: f64, b: f64, abs_tol: f64, rel_tol: f64, f: &mut dyn FnMut(f64) -> f64) -> (f64, f64) {
    let rule = gl15();
    let whole = rule.integrate(a, b, &mut *f);
    recurse(a, b, whole, (abs_tol, rel_tol), 0, f, rule)
}

fn recurse(
    a: f64,
    b: f64,
    whole: f64,
    tol: (f64, f64),
    depth: usize,
    f: &mut dyn FnMut(f64) -> f64,
    rule: &GaussLegendre,
) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let left = rule.integrate(a, m, &mut *f);
    let right = rule.integrate(m, b, &mut *f);
    let err = (left + right - whole).abs();
    if err <= tol.0.max(tol.1 * (left + right).abs()) || depth >= 24 || !err.is_finite() {
        return (left + right, err);
    }
    let half = (0.5 * tol.0, tol.1);
    let (l, el) = recurse(a, m, left, half, depth + 1, f, rule);
    let (r, er) = recurse(m, b, right, half, depth + 1, f, rule);
    (l + r, el + er)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for n in [1, 2, 5, 7, 15, 24, 48] {
            let g = GaussLegendre::new(n);
            assert_abs_diff_eq!(g.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            assert_abs_diff_eq!(g.integrate(-1.0, 1.0, |x| x.powi(deg as i32)), exact, epsilon = 1e-13);
            let even = 2 * (n - 1);
            assert_abs_diff_eq!(
                g.integrate(-1.0, 1.0, |x| x.powi(even as i32)),
                2.0 / (even as f64 + 1.0),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn nodes_are_sorted_and_symmetric() {
        let g = GaussLegendre::new(24);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        for (a, b) in g.nodes.iter().zip(g.nodes.iter().rev()) {
            assert_abs_diff_eq!(*a, -*b, epsilon = 1e-15);
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2
        let (v, _) = adaptive(0.0, 1.0, 1e-12, 0.0, &mut |x: f64| x.powf(-0.5));
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-5);
        let (v, _) = adaptive(0.0, std::f64::consts::PI, 1e-13, 0.0, &mut |x: f64| x.sin());
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-12);
    }
}
