//! Moment spaces: a radial weight `mu` on `[0, R)`, its moments
//! `c_n = int_0^R r^n mu(r) dr` held in log domain, and the probability
//! measures `d mu_n = r^{2n+1} mu(r) dr / c_{2n+1}`.

use std::borrow::Cow;
use std::sync::{OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::expr::{parse_with_vars, Program};
use crate::quad::{composite, gauss_legendre, geometric_breakpoints, QuadConfig};
use crate::special::{ln_gamma, log_sum_exp};

/// Log-kernel values below `max - KERNEL_CUTOFF` are dropped (`e^-60 ~ 1e-26`).
const KERNEL_CUTOFF: f64 = 60.0;
/// Panel width for half-line radial grids.
const HALFLINE_PANEL: f64 = 0.5;
const HALFLINE_MAX_RADIUS: f64 = 1.0e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SpaceKind {
    Bergman,
    Fock,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum Radius {
    Finite(f64),
    Infinite,
}

impl Radius {
    pub fn is_finite(self) -> bool {
        matches!(self, Radius::Finite(_))
    }

    /// `true` when `r` lies in `[0, R)`.
    pub fn contains(self, r: f64) -> bool {
        match self {
            Radius::Finite(big) => (0.0..big).contains(&r),
            Radius::Infinite => r >= 0.0 && r.is_finite(),
        }
    }
}

impl std::fmt::Display for Radius {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Radius::Finite(r) => write!(f, "{r}"),
            Radius::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug)]
enum Density {
    Bergman,
    Fock,
    Custom { source: String, program: Program },
}

/// Quadrature nodes on `[0, R)` with log weights such that
/// `int_0^R f(r) r mu(r) dr ~ sum_i exp(log_w[i]) f(r[i])`.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub r: Vec<f64>,
    pub ln_r: Vec<f64>,
    pub log_w: Vec<f64>,
}

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Weights of `r^exponent * r mu(r) dr` shifted by `-log_norm`, restricted
    /// to the contiguous node range where they are not negligible.
    pub fn kernel(&self, exponent: usize, log_norm: f64) -> Kernel {
        let e = exponent as f64;
        let logs: Vec<f64> = self
            .log_w
            .iter()
            .zip(&self.ln_r)
            .map(|(&lw, &lr)| lw + e * lr)
            .collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let keep = |v: &f64| *v > max - KERNEL_CUTOFF;
        let start = logs.iter().position(keep).unwrap_or(0);
        let end = logs.iter().rposition(keep).map_or(start, |i| i + 1);
        Kernel {
            start,
            weights: logs[start..end].iter().map(|&l| (l - log_norm).exp()).collect(),
        }
    }
}

/// A slice of normalized quadrature weights starting at node `start`.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub start: usize,
    pub weights: Vec<f64>,
}

impl Kernel {
    /// `sum_i w_i values[start + i]`.
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&values[self.start..self.start + self.weights.len()])
            .map(|(w, v)| w * v)
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// A radial weight with its memoized log-moment table.
#[derive(Debug)]
pub struct MomentSpace {
    kind: SpaceKind,
    radius: Radius,
    density: Density,
    quad: QuadConfig,
    memo: RwLock<Vec<Option<f64>>>,
    finite_grid: OnceLock<RadialGrid>,
}

impl MomentSpace {
    /// The Bergman space: `mu(r) = 2` on `[0, 1)`.
    pub fn bergman() -> Self {
        Self::with_density(SpaceKind::Bergman, Radius::Finite(1.0), Density::Bergman)
    }

    /// The Segal-Bargmann-Fock space: `mu(r) = 2 e^{-r^2}` on `[0, inf)`.
    pub fn fock() -> Self {
        Self::with_density(SpaceKind::Fock, Radius::Infinite, Density::Fock)
    }

    /// A space defined by an expression in `r`.
    pub fn custom(density: &str, radius: Radius) -> Result<Self> {
        if let Radius::Finite(r) = radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!("radius {r} must be positive")));
            }
        }
        let expr = parse_with_vars(density, &["r"])?;
        let program = Program::compile(&expr, &["r"])?;
        Ok(Self::with_density(
            SpaceKind::Custom,
            radius,
            Density::Custom {
                source: density.to_string(),
                program,
            },
        ))
    }

    fn with_density(kind: SpaceKind, radius: Radius, density: Density) -> Self {
        MomentSpace {
            kind,
            radius,
            density,
            quad: QuadConfig::default(),
            memo: RwLock::new(Vec::new()),
            finite_grid: OnceLock::new(),
        }
    }

    /// Replaces the quadrature configuration. Must be called before any
    /// moment is computed.
    pub fn with_quad(mut self, quad: QuadConfig) -> Self {
        self.quad = quad;
        self.memo = RwLock::new(Vec::new());
        self.finite_grid = OnceLock::new();
        self
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn radius(&self) -> Radius {
        self.radius
    }

    pub fn quad(&self) -> &QuadConfig {
        &self.quad
    }

    pub fn describe(&self) -> String {
        match &self.density {
            Density::Bergman => "bergman".into(),
            Density::Fock => "fock".into(),
            Density::Custom { source, .. } => format!("custom[{source}; R={}]", self.radius),
        }
    }

    /// `ln(r mu(r))`; `-inf` where the density vanishes.
    fn log_r_mu(&self, r: f64) -> Result<f64> {
        let mu = match &self.density {
            Density::Bergman => return Ok(r.ln() + std::f64::consts::LN_2),
            Density::Fock => return Ok(r.ln() + std::f64::consts::LN_2 - r * r),
            Density::Custom { program, .. } => program.eval(&[r])?,
        };
        if mu < 0.0 || mu.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "density is negative or undefined at r = {r} ({mu})"
            )));
        }
        Ok(r.ln() + mu.ln())
    }

    /// Radial grid resolving the kernels `r^j r mu(r)` for `j <= max_exponent`.
    /// On a finite radius the grid does not depend on `max_exponent`.
    pub fn grid(&self, max_exponent: usize) -> Result<Cow<'_, RadialGrid>> {
        match self.radius {
            Radius::Finite(big) => {
                if let Some(g) = self.finite_grid.get() {
                    return Ok(Cow::Borrowed(g));
                }
                let g = self.finite_panel_grid(0.0, big)?;
                Ok(Cow::Borrowed(self.finite_grid.get_or_init(|| g)))
            }
            Radius::Infinite => Ok(Cow::Owned(self.halfline_grid(max_exponent)?)),
        }
    }

    fn finite_panel_grid(&self, a: f64, b: f64) -> Result<RadialGrid> {
        let base = gauss_legendre(self.quad.radial_nodes)?;
        let rule = composite(&base, &geometric_breakpoints(a, b, self.quad.radial_panels.max(1)))?;
        let mut grid = RadialGrid {
            r: Vec::with_capacity(rule.len()),
            ln_r: Vec::with_capacity(rule.len()),
            log_w: Vec::with_capacity(rule.len()),
        };
        for (&r, &w) in rule.nodes.iter().zip(&rule.weights) {
            grid.r.push(r);
            grid.ln_r.push(r.ln());
            grid.log_w.push(w.ln() + self.log_r_mu(r)?);
        }
        Ok(grid)
    }

    /// Uniform panels from 0, extended until every checked kernel has decayed
    /// by `KERNEL_CUTOFF` below its running maximum.
    fn halfline_grid(&self, max_exponent: usize) -> Result<RadialGrid> {
        let nodes = (self.quad.radial_nodes / 8).max(16);
        let base = gauss_legendre(nodes)?;
        let checks: Vec<f64> = {
            let mut c: Vec<usize> = (0..=8).map(|k| max_exponent * k / 8).collect();
            c.dedup();
            c.into_iter().map(|j| j as f64).collect()
        };
        let mut peak = vec![f64::NEG_INFINITY; checks.len()];
        let mut grid = RadialGrid {
            r: Vec::new(),
            ln_r: Vec::new(),
            log_w: Vec::new(),
        };
        let mut panel = 0usize;
        loop {
            let a = panel as f64 * HALFLINE_PANEL;
            let b = a + HALFLINE_PANEL;
            if a > HALFLINE_MAX_RADIUS {
                return Err(Error::Quadrature(format!(
                    "radial weight of {} does not decay before r = {HALFLINE_MAX_RADIUS}",
                    self.describe()
                )));
            }
            let half = 0.5 * HALFLINE_PANEL;
            let mid = 0.5 * (a + b);
            for (&x, &w) in base.nodes.iter().zip(&base.weights) {
                let r = mid + half * x;
                let lw = (half * w).ln() + self.log_r_mu(r)?;
                let lr = r.ln();
                for (p, &j) in peak.iter_mut().zip(&checks) {
                    *p = p.max(lw + j * lr);
                }
                grid.r.push(r);
                grid.ln_r.push(lr);
                grid.log_w.push(lw);
            }
            panel += 1;
            let last = grid.len() - 1;
            let done = checks.iter().zip(&peak).all(|(&j, &p)| {
                p > f64::NEG_INFINITY
                    && grid.log_w[last] + j * grid.ln_r[last] < p - KERNEL_CUTOFF
                    && grid.log_w[last - nodes + 1] + j * grid.ln_r[last - nodes + 1]
                        < p - KERNEL_CUTOFF
            });
            if done {
                return Ok(grid);
            }
        }
    }

    /// `ln c_n`, memoized.
    pub fn log_moment(&self, n: usize) -> Result<f64> {
        if let Some(Some(v)) = self.memo.read().expect("memo lock").get(n) {
            return Ok(*v);
        }
        let v = self.compute_log_moment(n)?;
        let mut memo = self.memo.write().expect("memo lock");
        if memo.len() <= n {
            memo.resize(n + 1, None);
        }
        memo[n] = Some(v);
        Ok(v)
    }

    fn compute_log_moment(&self, n: usize) -> Result<f64> {
        let v = match &self.density {
            Density::Bergman => std::f64::consts::LN_2 - ((n + 1) as f64).ln(),
            Density::Fock => ln_gamma(0.5 * (n as f64 + 1.0)),
            Density::Custom { .. } => {
                let exponent = n.saturating_sub(1);
                let grid = self.grid(exponent)?;
                let shift = n as f64 - 1.0;
                log_sum_exp(
                    grid.log_w
                        .iter()
                        .zip(&grid.ln_r)
                        .map(|(&lw, &lr)| lw + shift * lr)
                        .collect::<Vec<_>>(),
                )
            }
        };
        if !v.is_finite() {
            return Err(Error::DegenerateWeight { n });
        }
        Ok(v)
    }

    /// `c_{2l+m+1} / sqrt(c_{2l+2m+1} c_{2l+1})`.
    pub fn moment_ratio(&self, l: usize, m: usize) -> Result<f64> {
        if m == 0 {
            return Ok(1.0);
        }
        let a = self.log_moment(2 * l + m + 1)?;
        let b = self.log_moment(2 * l + 2 * m + 1)?;
        let c = self.log_moment(2 * l + 1)?;
        Ok((a - 0.5 * b - 0.5 * c).exp())
    }

    /// `ln(c_{k+l+1} / sqrt(c_{2k+1} c_{2l+1}))`, the basis-normalization
    /// factor of matrix entry `(k, l)`.
    pub fn log_entry_factor(&self, k: usize, l: usize) -> Result<f64> {
        Ok(self.log_moment(k + l + 1)?
            - 0.5 * self.log_moment(2 * k + 1)?
            - 0.5 * self.log_moment(2 * l + 1)?)
    }

    pub fn measure(&self, n: usize) -> RadialMeasure<'_> {
        RadialMeasure { space: self, n }
    }

    /// Checks the standing hypotheses on the moment sequence over `0..=range`
    /// and returns (and logs) a warning for each violation.
    pub fn check_hypotheses(&self, range: usize) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.kind != SpaceKind::Custom {
            return Ok(warnings);
        }
        match self.radius {
            Radius::Finite(_) => {
                let logs: Vec<f64> = (0..=range + 1)
                    .map(|n| self.log_moment(n))
                    .collect::<Result<_>>()?;
                let ratios: Vec<f64> = logs.windows(2).map(|w| w[1] - w[0]).collect();
                if !is_monotonic(&ratios, 1e-12) {
                    warnings.push(format!(
                        "moment ratios c_(n+1)/c_n of {} are not monotonic over n <= {range}",
                        self.describe()
                    ));
                }
            }
            Radius::Infinite => {
                let ls: Vec<usize> = [8usize, 16, 32, 64, 128]
                    .into_iter()
                    .filter(|&l| l <= range.max(8))
                    .collect();
                for m in 1..=4 {
                    let vals: Vec<f64> = ls
                        .iter()
                        .map(|&l| self.moment_ratio(l, m))
                        .collect::<Result<_>>()?;
                    let increasing = vals.windows(2).all(|w| w[1] >= w[0] - 1e-12);
                    let gap_shrinks = vals.last().zip(vals.first()).is_some_and(|(a, b)| {
                        (1.0 - a) < 0.75 * (1.0 - b) || (1.0 - a) < 1e-6
                    });
                    if !(increasing && gap_shrinks) {
                        warnings.push(format!(
                            "moment ratio for m = {m} on {} is not approaching 1 over l in {ls:?}: {vals:?}",
                            self.describe()
                        ));
                    }
                }
            }
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(warnings)
    }
}

fn is_monotonic(values: &[f64], slack: f64) -> bool {
    let up = values.windows(2).all(|w| w[1] >= w[0] - slack);
    let down = values.windows(2).all(|w| w[1] <= w[0] + slack);
    up || down
}

/// The probability measure `mu_n`.
#[derive(Debug, Clone, Copy)]
pub struct RadialMeasure<'a> {
    pub space: &'a MomentSpace,
    pub n: usize,
}

impl RadialMeasure<'_> {
    /// Normalized kernel weights of `mu_n` on `grid`.
    pub fn kernel(&self, grid: &RadialGrid) -> Result<Kernel> {
        Ok(grid.kernel(2 * self.n, self.space.log_moment(2 * self.n + 1)?))
    }

    /// `mu_n([0, r_tilde))`.
    pub fn mass_below(&self, r_tilde: f64) -> Result<f64> {
        let inside = r_tilde > 0.0
            && match self.space.radius {
                Radius::Finite(big) => r_tilde < big,
                Radius::Infinite => r_tilde.is_finite(),
            };
        if !inside {
            return Err(Error::InvalidArgument(format!(
                "r_tilde = {r_tilde} outside (0, {})",
                self.space.radius
            )));
        }
        let grid = self.space.finite_panel_grid(0.0, r_tilde)?;
        let e = (2 * self.n) as f64;
        let log_num = log_sum_exp(
            grid.log_w
                .iter()
                .zip(&grid.ln_r)
                .map(|(&lw, &lr)| lw + e * lr)
                .collect::<Vec<_>>(),
        );
        let log_den = self.space.log_moment(2 * self.n + 1)?;
        Ok((log_num - log_den).exp().clamp(0.0, 1.0))
    }

    /// `int_0^R g(r) d mu_n(r)`.
    pub fn expectation<G>(&self, mut g: G) -> Result<f64>
    where
        G: FnMut(f64) -> Result<f64>,
    {
        let grid = self.space.grid(2 * self.n)?;
        let k = self.kernel(&grid)?;
        let mut acc = 0.0;
        for (i, w) in k.weights.iter().enumerate() {
            acc += w * g(grid.r[k.start + i])?;
        }
        Ok(acc)
    }
}
