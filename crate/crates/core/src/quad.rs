//! Quadrature rules: Gauss-Legendre on finite intervals, composite panel rules,
//! the uniform periodic trapezoid for angular means, and a truncated rule for
//! half-line integrals against `e^{-t}`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest Gauss-Legendre order accepted by [`gauss_legendre`].
pub const MAX_GAUSS_NODES: usize = 4096;

/// Node counts shared by every radial and angular integral.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadConfig {
    /// Gauss-Legendre nodes per radial panel.
    pub radial_nodes: usize,
    /// Number of geometrically refined panels on a finite radius.
    pub radial_panels: usize,
    /// Uniform angle samples for angular means and Fourier coefficients.
    pub angular_samples: usize,
    pub tail_tol: f64,
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radial_nodes == 0 || self.radial_nodes > MAX_GAUSS_NODES {
            return Err(Error::InvalidArgument(format!(
                "radial_nodes {} outside 1..={MAX_GAUSS_NODES}",
                self.radial_nodes
            )));
        }
        if self.radial_panels == 0 {
            return Err(Error::InvalidArgument("radial_panels must be positive".into()));
        }
        if self.angular_samples < 4 {
            return Err(Error::InvalidArgument(format!(
                "angular_samples {} is below 4",
                self.angular_samples
            )));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol <= 1e-6) {
            return Err(Error::InvalidArgument(format!(
                "tail_tol {} outside (0, 1e-6]",
                self.tail_tol
            )));
        }
        Ok(())
    }
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            radial_nodes: 200,
            radial_panels: 8,
            angular_samples: 512,
            tail_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval(f64, f64),
    HalfLine,
}

/// Nodes and positive weights of an interpolatory rule.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub domain: Domain,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn try_integrate<F, E>(&self, mut f: F) -> std::result::Result<f64, E>
    where
        F: FnMut(f64) -> std::result::Result<f64, E>,
    {
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(x)?;
        }
        Ok(acc)
    }
}

/// `n`-point Gauss-Legendre rule on [-1, 1].
///
/// Nodes are found by Newton iteration on the three-term recurrence, starting
/// from `cos(pi (i + 3/4) / (n + 1/2))`; weights are `2 / ((1 - x^2) P_n'(x)^2)`.
/// Only the positive half is computed, the rest is mirrored.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_GAUSS_NODES {
        return Err(Error::InvalidArgument(format!(
            "Gauss-Legendre order {n} outside 1..={MAX_GAUSS_NODES}"
        )));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n / 2;
    for i in 0..half {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                dp = legendre_with_derivative(n, x).1;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // i-th root counted from +1; store ascending.
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        let (_, d) = legendre_with_derivative(n, 0.0);
        nodes[half] = 0.0;
        weights[half] = 2.0 / (d * d);
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        domain: Domain::Interval(-1.0, 1.0),
    })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Affine image of a rule on [-1, 1] onto [a, b].
pub fn map_to_interval(rule: &QuadratureRule, a: f64, b: f64) -> Result<QuadratureRule> {
    if !(a < b) {
        return Err(Error::InvalidArgument(format!(
            "interval [{a}, {b}] is empty or reversed"
        )));
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Ok(QuadratureRule {
        nodes: rule.nodes.iter().map(|&x| mid + half * x).collect(),
        weights: rule.weights.iter().map(|&w| half * w).collect(),
        domain: Domain::Interval(a, b),
    })
}

/// Breakpoints `a, a + L/2, a + 3L/4, ...` refined toward `b`, `panels`
/// intervals in total.
pub fn geometric_breakpoints(a: f64, b: f64, panels: usize) -> Vec<f64> {
    let len = b - a;
    let mut pts = Vec::with_capacity(panels + 1);
    pts.push(a);
    for j in 1..panels {
        pts.push(a + len * (1.0 - 0.5f64.powi(j as i32)));
    }
    pts.push(b);
    pts
}

/// Composite rule: a copy of `base` (on [-1, 1]) on each panel.
pub fn composite(base: &QuadratureRule, breakpoints: &[f64]) -> Result<QuadratureRule> {
    let mut nodes = Vec::with_capacity(base.len() * breakpoints.len());
    let mut weights = Vec::with_capacity(nodes.capacity());
    for w in breakpoints.windows(2) {
        let panel = map_to_interval(base, w[0], w[1])?;
        nodes.extend(panel.nodes);
        weights.extend(panel.weights);
    }
    let a = *breakpoints.first().unwrap_or(&0.0);
    let b = *breakpoints.last().unwrap_or(&0.0);
    Ok(QuadratureRule {
        nodes,
        weights,
        domain: Domain::Interval(a, b),
    })
}

/// `(1/M) sum_j f(2 pi j / M)`: the normalized angular mean.
pub fn trapezoid_periodic<F, E>(mut f: F, m: usize) -> std::result::Result<f64, E>
where
    F: FnMut(f64) -> std::result::Result<f64, E>,
{
    let values = (0..m)
        .map(|j| f(angle(j, m)))
        .collect::<std::result::Result<Vec<_>, E>>()?;
    Ok(crate::special::compensated_sum(values) / m as f64)
}

/// The `j`-th of `m` uniform angles in [0, 2 pi).
#[inline]
pub fn angle(j: usize, m: usize) -> f64 {
    2.0 * PI * j as f64 / m as f64
}

/// `int_0^inf g(t) e^{-t} dt` truncated to `[0, T]`.
///
/// `sup |g|` is estimated by sampling; `T` is the smallest integer with
/// `sup|g| e^{-T} (1 + T) < tail_tol`. The truncated interval is covered by
/// unit panels of 32-point Gauss-Legendre.
pub fn integrate_halfline_gaussian<F>(mut g: F, tail_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(tail_tol > 0.0 && tail_tol <= 1e-6) {
        return Err(Error::InvalidArgument(format!(
            "tail tolerance {tail_tol} outside (0, 1e-6]"
        )));
    }
    let mut sup = 0.0f64;
    let mut t = 0.0;
    while t <= 200.0 {
        let v = g(t);
        if !v.is_finite() {
            return Err(Error::Quadrature(format!(
                "integrand is not finite at t = {t}"
            )));
        }
        sup = sup.max(v.abs());
        t += 0.25;
    }
    for k in 8..40 {
        let v = g((k as f64).exp2());
        if !v.is_finite() {
            return Err(Error::Quadrature("integrand overflows on the half-line".into()));
        }
        sup = sup.max(v.abs());
    }
    let mut cut = 1.0f64;
    while sup * (-cut).exp() * (1.0 + cut) >= tail_tol {
        cut += 1.0;
    }
    let base = gauss_legendre(32)?;
    let breaks: Vec<f64> = (0..=cut as usize).map(|k| k as f64).collect();
    let rule = composite(&base, &breaks)?;
    let mut acc = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let v = g(x);
        if !v.is_finite() {
            return Err(Error::Quadrature(format!("integrand is not finite at t = {x}")));
        }
        acc += w * v * (-x).exp();
    }
    Ok(acc)
}
