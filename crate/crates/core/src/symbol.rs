//! Bounded symbols on the disc, their angular Fourier coefficients, and
//! boundary (radial-limit) functions on the circle.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::expr::{free_variables, parse_with_vars, Expr, Program};
use crate::moments::{MomentSpace, Radius};
use crate::quad::angle;
use crate::special::compensated_sum;

const SYMBOL_VARS: [&str; 4] = ["r", "theta", "x", "y"];
const TAU: f64 = std::f64::consts::TAU;

/// Which variables a symbol depends on. `x` and `y` count as general.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Classification {
    Constant,
    Radial,
    Angular,
    General,
}

impl Classification {
    fn of(e: &Expr) -> Self {
        let vars = free_variables(e);
        let has = |v: &str| vars.contains(v);
        if has("x") || has("y") || (has("r") && has("theta")) {
            Classification::General
        } else if has("r") {
            Classification::Radial
        } else if has("theta") {
            Classification::Angular
        } else {
            Classification::Constant
        }
    }

    pub fn is_radial(self) -> bool {
        matches!(self, Classification::Constant | Classification::Radial)
    }

    pub fn is_angular(self) -> bool {
        matches!(self, Classification::Constant | Classification::Angular)
    }
}

/// Normalizes an angle to `[0, 2 pi)`.
#[inline]
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// A real symbol `sigma(r, theta)` with `x = r cos(theta)`, `y = r sin(theta)`.
#[derive(Debug, Clone)]
pub struct Symbol {
    source: String,
    program: Program,
    classification: Classification,
    declared_bounds: Option<(f64, f64)>,
}

impl Symbol {
    pub fn parse(source: &str) -> Result<Self> {
        let expr = parse_with_vars(source, &SYMBOL_VARS)?;
        let classification = Classification::of(&expr);
        Ok(Symbol {
            source: source.to_string(),
            program: Program::compile(&expr, &SYMBOL_VARS)?,
            classification,
            declared_bounds: None,
        })
    }

    /// Declares `[inf sigma, sup sigma]` instead of estimating it by sampling.
    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("bad symbol bounds [{lo}, {hi}]")));
        }
        self.declared_bounds = Some((lo, hi));
        Ok(self)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        self.program.expr()
    }

    pub fn classification(&self) -> Classification {
        self.classification
    }

    #[inline]
    pub fn eval(&self, r: f64, theta: f64) -> Result<f64> {
        let t = normalize_angle(theta);
        let (s, c) = t.sin_cos();
        Ok(self.program.eval(&[r, t, r * c, r * s])?)
    }

    /// Value at `(r, 2 pi j / m)` using the exact grid angle.
    #[inline]
    fn eval_grid(&self, r: f64, j: usize, m: usize) -> Result<f64> {
        let t = angle(j, m);
        let (s, c) = t.sin_cos();
        let v = self.program.eval(&[r, t, r * c, r * s])?;
        if !v.is_finite() {
            return Err(Error::Unbounded(format!(
                "'{}' is not finite at r = {r}, theta = {t}",
                self.source
            )));
        }
        Ok(v)
    }

    /// Declared bounds, or `[min, max]` over a dense sample of the disc.
    pub fn bounds(&self, space: &MomentSpace) -> Result<(f64, f64)> {
        if let Some(b) = self.declared_bounds {
            return Ok(b);
        }
        let mut radii: Vec<f64> = match space.radius() {
            Radius::Finite(big) => {
                let mut v: Vec<f64> = (0..128).map(|k| big * k as f64 / 128.0).collect();
                v.extend((1..=40).map(|j| big * (1.0 - 0.5f64.powi(j))));
                v
            }
            Radius::Infinite => {
                let mut v: Vec<f64> = (0..256).map(|k| k as f64 * 0.25).collect();
                v.extend((6..=40).map(|k| (k as f64).exp2()));
                v
            }
        };
        if self.classification.is_angular() {
            radii.truncate(1);
        }
        let thetas = if self.classification.is_radial() { 1 } else { 1024 };
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &r in &radii {
            for j in 0..thetas {
                let v = self.eval_grid(r, j, thetas)?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Ok((lo, hi))
    }

    /// `sigma_hat_m(r) = (1/2pi) int sigma(r e^{i theta}) e^{-i m theta} d theta`
    /// by the `samples`-point periodic trapezoid.
    pub fn angular_coefficient(&self, m: i64, r: f64, samples: usize) -> Result<Complex64> {
        if samples == 0 || 2 * m.unsigned_abs() as usize >= samples {
            return Err(Error::InvalidArgument(format!(
                "|m| = {} must be below samples / 2 = {}",
                m.unsigned_abs(),
                samples / 2
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        let mm = m.rem_euclid(samples as i64) as usize;
        for j in 0..samples {
            let v = self.eval_grid(r, j, samples)?;
            let phase = angle((mm * j) % samples, samples);
            acc += Complex64::new(v * phase.cos(), -v * phase.sin());
        }
        Ok(acc / samples as f64)
    }
}

/// Where a boundary function came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum BoundaryProvenance {
    Explicit,
    EvaluatedAtR,
    Extrapolated,
}

/// A function `sigma~(theta)` on the boundary circle.
#[derive(Debug, Clone)]
pub struct BoundarySymbol {
    program: Program,
    provenance: BoundaryProvenance,
}

impl BoundarySymbol {
    pub fn parse(source: &str) -> Result<Self> {
        let expr = parse_with_vars(source, &["theta"])?;
        Self::from_expr(expr, BoundaryProvenance::Explicit)
    }

    /// The boundary function of a symbol that depends on the angle only; it
    /// is its own radial limit for every radius.
    pub fn from_angular(sym: &Symbol) -> Result<Self> {
        if !sym.classification().is_angular() {
            return Err(Error::InvalidArgument(format!(
                "'{}' depends on the radius",
                sym.source()
            )));
        }
        Self::from_expr(sym.expr().clone(), BoundaryProvenance::EvaluatedAtR)
    }

    fn from_expr(expr: Expr, provenance: BoundaryProvenance) -> Result<Self> {
        let b = BoundarySymbol {
            program: Program::compile(&expr, &["theta"])?,
            provenance,
        };
        // dense-sample boundedness check
        for j in 0..4096 {
            let v = b.eval_grid(j, 4096)?;
            if !v.is_finite() {
                return Err(Error::Unbounded(format!("boundary '{expr}' is not finite")));
            }
        }
        Ok(b)
    }

    pub fn expr(&self) -> &Expr {
        self.program.expr()
    }

    pub fn provenance(&self) -> BoundaryProvenance {
        self.provenance
    }

    /// `true` when the boundary function does not depend on `theta`.
    pub fn is_constant(&self) -> bool {
        free_variables(self.expr()).is_empty()
    }

    pub fn eval(&self, theta: f64) -> Result<f64> {
        Ok(self.program.eval(&[normalize_angle(theta)])?)
    }

    #[inline]
    fn eval_grid(&self, j: usize, m: usize) -> Result<f64> {
        Ok(self.program.eval(&[angle(j, m)])?)
    }

    pub fn samples(&self, m: usize) -> Result<Vec<f64>> {
        (0..m).map(|j| self.eval_grid(j, m)).collect()
    }

    /// Fourier coefficients `h(0), h(1), ..., h(max_m)`; `h(-m) = conj h(m)`.
    ///
    /// Uses at least `samples` points, raised to a power of two above
    /// `2 max_m + 1` so no requested coefficient aliases.
    pub fn coefficients(&self, max_m: usize, samples: usize) -> Result<Vec<Complex64>> {
        if self.is_constant() {
            let mut out = vec![Complex64::new(0.0, 0.0); max_m + 1];
            out[0] = Complex64::new(self.eval(0.0)?, 0.0);
            return Ok(out);
        }
        let m = effective_samples(samples, max_m);
        let t = AngularTransform::new(m);
        let values = self.samples(m)?;
        Ok(t.coefficients(&values, max_m))
    }

    /// `(1/2pi) int psi(sigma~(theta)) d theta`.
    pub fn average(&self, psi: &TestFunction, samples: usize) -> Result<f64> {
        if samples == 0 {
            return Err(Error::InvalidArgument("zero angular samples".into()));
        }
        let values = (0..samples)
            .map(|j| psi.eval(self.eval_grid(j, samples)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(compensated_sum(values) / samples as f64)
    }

    /// `|{alpha < sigma~ < beta}| / 2pi` as a fraction of uniform samples.
    pub fn level_measure(&self, alpha: f64, beta: f64, samples: usize) -> Result<f64> {
        if !(alpha < beta) {
            return Err(Error::InvalidArgument(format!(
                "window ({alpha}, {beta}) is empty"
            )));
        }
        if samples < 1024 {
            return Err(Error::InvalidArgument(format!(
                "level measure needs at least 1024 samples, got {samples}"
            )));
        }
        let mut count = 0usize;
        for j in 0..samples {
            let v = self.eval_grid(j, samples)?;
            if alpha < v && v < beta {
                count += 1;
            }
        }
        Ok(count as f64 / samples as f64)
    }

    /// Fraction of samples within `width` of `level`: a proxy for the measure
    /// of the level set `{sigma~ = level}`.
    pub fn level_set_fraction(&self, level: f64, width: f64, samples: usize) -> Result<f64> {
        let mut count = 0usize;
        for j in 0..samples {
            if (self.eval_grid(j, samples)? - level).abs() <= width {
                count += 1;
            }
        }
        Ok(count as f64 / samples as f64)
    }
}

/// Sample count used when coefficients up to `|m| = max_m` are required.
pub fn effective_samples(samples: usize, max_m: usize) -> usize {
    samples.max((2 * max_m + 2).next_power_of_two()).max(4)
}

/// Strategy for obtaining the boundary function.
#[derive(Debug, Clone, Default)]
pub struct RadialLimitStrategy {
    /// Explicit boundary expression in `theta`; takes precedence.
    pub explicit: Option<String>,
}

/// The radial limit `sigma~(theta) = lim_{r -> R} sigma(r e^{i theta})`.
///
/// Finite `R`: substitute `r = R`. Infinite `R`: an explicit expression, or for
/// radial symbols a value detected to stabilize along `r = 2^k`.
pub fn radial_limit(
    sym: &Symbol,
    space: &MomentSpace,
    strategy: &RadialLimitStrategy,
) -> Result<BoundarySymbol> {
    if let Some(src) = &strategy.explicit {
        return BoundarySymbol::parse(src);
    }
    match space.radius() {
        Radius::Finite(big) => {
            let radius = Expr::Num(big);
            let theta = Expr::Var("theta".into());
            let scaled = |f: crate::expr::Func| {
                Expr::Binary(
                    crate::expr::BinOp::Mul,
                    Box::new(radius.clone()),
                    Box::new(Expr::Call(f, vec![theta.clone()])),
                )
            };
            let e = sym
                .expr()
                .substitute("r", &radius)
                .substitute("x", &scaled(crate::expr::Func::Cos))
                .substitute("y", &scaled(crate::expr::Func::Sin));
            BoundarySymbol::from_expr(e, BoundaryProvenance::EvaluatedAtR)
        }
        Radius::Infinite => {
            if sym.classification().is_angular() {
                return BoundarySymbol::from_angular(sym);
            }
            if !sym.classification().is_radial() {
                return Err(Error::NoRadialLimit(format!(
                    "'{}' depends on the angle on an infinite-radius space; an explicit boundary expression is required",
                    sym.source()
                )));
            }
            let mut prev = sym.eval(1.0, 0.0)?;
            for k in 1..=60 {
                let v = sym.eval((k as f64).exp2(), 0.0)?;
                if (v - prev).abs() < 1e-9 {
                    return BoundarySymbol::from_expr(
                        Expr::Num(v),
                        BoundaryProvenance::Extrapolated,
                    );
                }
                prev = v;
            }
            Err(Error::NoRadialLimit(format!(
                "'{}' does not stabilize along r = 2^k",
                sym.source()
            )))
        }
    }
}

/// A test function `psi(x)`.
#[derive(Debug, Clone)]
pub struct TestFunction {
    program: Program,
}

impl TestFunction {
    pub fn parse(source: &str) -> Result<Self> {
        let expr = parse_with_vars(source, &["x"])?;
        Ok(TestFunction {
            program: Program::compile(&expr, &["x"])?,
        })
    }

    pub fn identity() -> Self {
        Self::parse("x").expect("identity parses")
    }

    pub fn expr(&self) -> &Expr {
        self.program.expr()
    }

    #[inline]
    pub fn eval(&self, x: f64) -> Result<f64> {
        let v = self.program.eval(&[x])?;
        if !v.is_finite() {
            return Err(Error::Unbounded(format!(
                "psi = '{}' is not finite at x = {x}",
                self.expr()
            )));
        }
        Ok(v)
    }

    /// Checks that psi is finite on a dense sample of `[lo, hi]`.
    pub fn check_on(&self, lo: f64, hi: f64) -> Result<()> {
        for k in 0..=1000 {
            self.eval(lo + (hi - lo) * k as f64 / 1000.0)?;
        }
        Ok(())
    }
}

/// Shared FFT plan for `m` uniform angle samples.
#[derive(Clone)]
pub struct AngularTransform {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for AngularTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AngularTransform").field("m", &self.m).finish()
    }
}

impl AngularTransform {
    pub fn new(m: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(m);
        AngularTransform { m, fft }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// `c_k = (1/m) sum_j v_j e^{-2 pi i j k / m}` for `k = 0..=max_k`.
    pub fn coefficients(&self, values: &[f64], max_k: usize) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.m);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.process(&mut buf);
        let scale = 1.0 / self.m as f64;
        buf.truncate(max_k + 1);
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Symbol samples on the circle of radius `r`.
    pub fn symbol_samples(&self, sym: &Symbol, r: f64) -> Result<Vec<f64>> {
        (0..self.m).map(|j| sym.eval_grid(r, j, self.m)).collect()
    }
}
