//! Finite-N convergence studies: normalized traces, eigenvalue counting and
//! the radial measures, each compared with its boundary target.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::MomentSpace;
use crate::quad::QuadConfig;
use crate::spectra::Spectrum;
use crate::symbol::{BoundarySymbol, Classification, Symbol, TestFunction};
use crate::toeplitz::{self, CompressedMatrix};

/// Agreement required between the spectral and integral trace paths.
pub const TWO_PATH_TOL: f64 = 1e-9;
/// Half-width of the band used to estimate level-set measure.
pub const LEVEL_BAND: f64 = 1e-6;
/// Level-set fraction above which a window is reported as degenerate.
pub const LEVEL_WARN: f64 = 1e-3;
/// Angle samples for level measures and level-set estimates.
pub const LEVEL_SAMPLES: usize = 1 << 16;

/// Default geometric schedule `16, 32, ..., 1024`.
pub fn default_orders() -> Vec<usize> {
    (4..=10).map(|k| 1usize << k).collect()
}

/// Matrix assembly route.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assembly {
    /// Choose from the symbol's classification.
    #[default]
    Auto,
    /// Always integrate numerically, even when a closed form exists.
    General,
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub quad: QuadConfig,
    pub assembly: Assembly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub space: String,
    pub symbol: String,
    pub boundary: String,
    pub psi: Option<String>,
    pub quad: QuadConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub experiment: String,
    pub orders: Vec<usize>,
    pub values: Vec<f64>,
    pub target: f64,
    pub errors: Vec<f64>,
    pub deviations: Option<Vec<f64>>,
    /// `|spectral - integral|` per order, for the averaging experiment.
    pub two_path_gaps: Option<Vec<f64>>,
    pub metadata: Metadata,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    pub orders: Vec<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub counts: Vec<usize>,
    pub fractions: Vec<f64>,
    pub target: f64,
    pub errors: Vec<f64>,
    pub metadata: Metadata,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioColumn {
    pub m: usize,
    pub ratios: Vec<f64>,
    pub nondecreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasuresReport {
    pub space: String,
    pub r_tilde: f64,
    pub orders: Vec<usize>,
    pub mass_below: Vec<f64>,
    pub mass_nonincreasing: bool,
    pub ratio_columns: Vec<RatioColumn>,
    pub warnings: Vec<String>,
}

/// A per-order series with a constant target, as consumed by plotting.
pub trait Series {
    fn title(&self) -> String;
    fn orders(&self) -> &[usize];
    fn values(&self) -> &[f64];
    fn target(&self) -> f64;
    fn errors(&self) -> &[f64];
}

impl Series for ConvergenceReport {
    fn title(&self) -> String {
        let psi = self.metadata.psi.as_deref().unwrap_or("x");
        format!("{}: {} on {}, psi = {psi}", self.experiment, self.metadata.symbol, self.metadata.space)
    }
    fn orders(&self) -> &[usize] {
        &self.orders
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
    fn target(&self) -> f64 {
        self.target
    }
    fn errors(&self) -> &[f64] {
        &self.errors
    }
}

impl Series for DensityReport {
    fn title(&self) -> String {
        format!(
            "density: {} on {}, window ({}, {})",
            self.metadata.symbol, self.metadata.space, self.alpha, self.beta
        )
    }
    fn orders(&self) -> &[usize] {
        &self.orders
    }
    fn values(&self) -> &[f64] {
        &self.fractions
    }
    fn target(&self) -> f64 {
        self.target
    }
    fn errors(&self) -> &[f64] {
        &self.errors
    }
}

/// Formats a double with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl ConvergenceReport {
    /// Columns `N,value,target,error[,deviation]`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,value,target,error");
        if self.deviations.is_some() {
            out.push_str(",deviation");
        }
        out.push('\n');
        for (i, n) in self.orders.iter().enumerate() {
            let _ = write!(
                out,
                "{n},{},{},{}",
                fmt17(self.values[i]),
                fmt17(self.target),
                fmt17(self.errors[i])
            );
            if let Some(d) = &self.deviations {
                let _ = write!(out, ",{}", fmt17(d[i]));
            }
            out.push('\n');
        }
        out
    }
}

impl DensityReport {
    /// Columns `N,count,fraction,target,error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,count,fraction,target,error\n");
        for (i, n) in self.orders.iter().enumerate() {
            let _ = writeln!(
                out,
                "{n},{},{},{},{}",
                self.counts[i],
                fmt17(self.fractions[i]),
                fmt17(self.target),
                fmt17(self.errors[i])
            );
        }
        out
    }
}

impl MeasuresReport {
    /// Columns `n,mass_below,ratio_m...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,mass_below");
        for c in &self.ratio_columns {
            let _ = write!(out, ",ratio_m{}", c.m);
        }
        out.push('\n');
        for (i, n) in self.orders.iter().enumerate() {
            let _ = write!(out, "{n},{}", fmt17(self.mass_below[i]));
            for c in &self.ratio_columns {
                let _ = write!(out, ",{}", fmt17(c.ratios[i]));
            }
            out.push('\n');
        }
        out
    }
}

fn check_orders(orders: &[usize]) -> Result<()> {
    if orders.is_empty() {
        return Err(Error::InvalidArgument("empty order schedule".into()));
    }
    if orders[0] == 0 || orders.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "orders must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

fn metadata(space: &MomentSpace, sym: &Symbol, bsym: &BoundarySymbol, psi: Option<&TestFunction>, quad: &QuadConfig) -> Metadata {
    Metadata {
        space: space.describe(),
        symbol: sym.source().to_string(),
        boundary: bsym.expr().to_string(),
        psi: psi.map(|p| p.expr().to_string()),
        quad: *quad,
    }
}

/// Assembles once at the largest order; smaller orders are principal blocks.
fn largest_matrix(space: &MomentSpace, sym: &Symbol, order: usize, opts: &Options) -> Result<CompressedMatrix> {
    match opts.assembly {
        Assembly::Auto => toeplitz::assemble(space, sym, order, &opts.quad),
        Assembly::General => toeplitz::assemble_general(space, sym, order, &opts.quad),
    }
}

/// Spectra of the nested blocks, in schedule order.
fn spectra(matrix: &CompressedMatrix, orders: &[usize]) -> Result<Vec<Spectrum>> {
    orders
        .par_iter()
        .map(|&n| Spectrum::compute(&matrix.principal(n)?))
        .collect()
}

fn abs_errors(values: &[f64], target: f64) -> Vec<f64> {
    values.iter().map(|v| (v - target).abs()).collect()
}

/// `(1/(N+1)) tr(A_N)` computed from the spectrum and from the sum of
/// diagonal radial expectations, against the boundary mean.
pub fn averaging_experiment(
    space: &MomentSpace,
    sym: &Symbol,
    bsym: &BoundarySymbol,
    orders: &[usize],
    opts: &Options,
) -> Result<ConvergenceReport> {
    check_orders(orders)?;
    let top = *orders.last().expect("non-empty");
    let matrix = largest_matrix(space, sym, top, opts)?;
    let spectra = spectra(&matrix, orders)?;
    let diag = toeplitz::diagonal_expectations(space, sym, top, &opts.quad)?;
    let mut values = Vec::with_capacity(orders.len());
    let mut gaps = Vec::with_capacity(orders.len());
    let mut warnings = Vec::new();
    for (sp, &n) in spectra.iter().zip(orders) {
        let scale = (n + 1) as f64;
        let spectral = sp.eigenvalues.iter().sum::<f64>() / scale;
        let integral = diag[..=n].iter().sum::<f64>() / scale;
        let gap = (spectral - integral).abs();
        if gap > TWO_PATH_TOL {
            let msg = format!("N = {n}: spectral and integral traces differ by {gap:e}");
            log::warn!("{msg}");
            warnings.push(msg);
        }
        values.push(spectral);
        gaps.push(gap);
    }
    let target = bsym.average(&TestFunction::identity(), opts.quad.angular_samples)?;
    Ok(ConvergenceReport {
        experiment: "averaging".into(),
        errors: abs_errors(&values, target),
        orders: orders.to_vec(),
        values,
        target,
        deviations: None,
        two_path_gaps: Some(gaps),
        metadata: metadata(space, sym, bsym, None, &opts.quad),
        warnings,
    })
}

/// `(1/(N+1)) tr psi(A_N)` against `(1/2pi) int psi(boundary)`.
pub fn szego_experiment(
    space: &MomentSpace,
    sym: &Symbol,
    bsym: &BoundarySymbol,
    psi: &TestFunction,
    orders: &[usize],
    opts: &Options,
) -> Result<ConvergenceReport> {
    check_orders(orders)?;
    let (lo, hi) = sym.bounds(space)?;
    psi.check_on(lo, hi)?;
    let top = *orders.last().expect("non-empty");
    let matrix = largest_matrix(space, sym, top, opts)?;
    let spectra = spectra(&matrix, orders)?;
    let values = spectra
        .iter()
        .zip(orders)
        .map(|(sp, &n)| Ok(sp.trace_psi(psi)? / (n + 1) as f64))
        .collect::<Result<Vec<_>>>()?;
    let target = bsym.average(psi, opts.quad.angular_samples)?;
    let deviations = if sym.classification().is_angular() {
        None
    } else {
        Some(
            orders
                .iter()
                .map(|&n| toeplitz::symbol_deviation(space, sym, bsym, n, &opts.quad))
                .collect::<Result<Vec<_>>>()?,
        )
    };
    Ok(ConvergenceReport {
        experiment: "szego".into(),
        errors: abs_errors(&values, target),
        orders: orders.to_vec(),
        values,
        target,
        deviations,
        two_path_gaps: None,
        metadata: metadata(space, sym, bsym, Some(psi), &opts.quad),
        warnings: Vec::new(),
    })
}

/// Fraction of eigenvalues strictly inside `(alpha, beta)` against the
/// normalized measure of `{alpha < boundary < beta}`.
pub fn weyl_experiment(
    space: &MomentSpace,
    sym: &Symbol,
    bsym: &BoundarySymbol,
    alpha: f64,
    beta: f64,
    orders: &[usize],
    opts: &Options,
) -> Result<DensityReport> {
    check_orders(orders)?;
    if !(alpha < beta) {
        return Err(Error::InvalidArgument(format!(
            "window ({alpha}, {beta}) is empty"
        )));
    }
    let mut warnings = Vec::new();
    if !(alpha > 0.0 || beta < 0.0) {
        warnings.push(format!(
            "window ({alpha}, {beta}) has neither alpha > 0 nor beta < 0; the limit is not asserted"
        ));
    }
    let samples = opts.quad.angular_samples.max(LEVEL_SAMPLES);
    for level in [alpha, beta] {
        let frac = bsym.level_set_fraction(level, LEVEL_BAND, samples)?;
        if frac > LEVEL_WARN {
            warnings.push(format!(
                "boundary symbol spends a fraction {frac:e} of the circle within {LEVEL_BAND:e} of {level}"
            ));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let top = *orders.last().expect("non-empty");
    let matrix = largest_matrix(space, sym, top, opts)?;
    let spectra = spectra(&matrix, orders)?;
    let (counts, fractions): (Vec<usize>, Vec<f64>) =
        spectra.iter().map(|sp| sp.count_in(alpha, beta)).unzip();
    let target = bsym.level_measure(alpha, beta, samples)?;
    Ok(DensityReport {
        errors: abs_errors(&fractions, target),
        orders: orders.to_vec(),
        alpha,
        beta,
        counts,
        fractions,
        target,
        metadata: metadata(space, sym, bsym, None, &opts.quad),
        warnings,
    })
}

/// `mu_n([0, r_tilde))` and the moment ratios `(l, m)` for every order in
/// `orders`, one ratio column per `m`.
pub fn measures_experiment(
    space: &MomentSpace,
    r_tilde: f64,
    m_list: &[usize],
    orders: &[usize],
) -> Result<MeasuresReport> {
    if orders.is_empty() {
        return Err(Error::InvalidArgument("empty order list".into()));
    }
    if m_list.contains(&0) {
        return Err(Error::InvalidArgument("m must be a positive integer".into()));
    }
    let mass_below = orders
        .par_iter()
        .map(|&n| space.measure(n).mass_below(r_tilde))
        .collect::<Result<Vec<_>>>()?;
    let ratio_columns = m_list
        .iter()
        .map(|&m| {
            let ratios = orders
                .iter()
                .map(|&l| space.moment_ratio(l, m))
                .collect::<Result<Vec<_>>>()?;
            let nondecreasing = ratios.windows(2).all(|w| w[1] >= w[0] - 1e-15);
            Ok(RatioColumn {
                m,
                ratios,
                nondecreasing,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mass_nonincreasing = mass_below.windows(2).all(|w| w[1] <= w[0] + 1e-15);
    let mut warnings = Vec::new();
    if !mass_nonincreasing {
        warnings.push("mass below r~ is not monotone in n".to_string());
    }
    for c in &ratio_columns {
        if !c.nondecreasing {
            warnings.push(format!("moment ratio column m = {} is not monotone", c.m));
        }
    }
    Ok(MeasuresReport {
        space: space.describe(),
        r_tilde,
        orders: orders.to_vec(),
        mass_below,
        mass_nonincreasing,
        ratio_columns,
        warnings,
    })
}

/// True when the symbol is its own boundary function.
pub fn is_angle_only(sym: &Symbol) -> bool {
    matches!(
        sym.classification(),
        Classification::Constant | Classification::Angular
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{radial_limit, RadialLimitStrategy};

    fn setup(space: &MomentSpace, s: &str) -> (Symbol, BoundarySymbol) {
        let sym = Symbol::parse(s).unwrap();
        let b = radial_limit(&sym, space, &RadialLimitStrategy::default()).unwrap();
        (sym, b)
    }

    fn harmonic_value(n: usize) -> f64 {
        1.0 - (0..=n).map(|k| 1.0 / (k as f64 + 2.0)).sum::<f64>() / (n + 1) as f64
    }

    #[test]
    fn averaging_examples() {
        let b = MomentSpace::bergman();
        let (sym, bs) = setup(&b, "r^2");
        let rep = averaging_experiment(&b, &sym, &bs, &[10, 100, 1000], &Options::default()).unwrap();
        assert!((rep.values[0] - 0.808_799_029_253_574_7).abs() < 1e-9);
        for (v, &n) in rep.values.iter().zip(&rep.orders) {
            assert!((v - harmonic_value(n)).abs() < 1e-9);
        }
        assert!(rep.two_path_gaps.unwrap().iter().all(|g| *g <= TWO_PATH_TOL));
        assert_eq!(rep.target, 1.0);

        let (sym, bs) = setup(&b, "0.7");
        let rep = averaging_experiment(&b, &sym, &bs, &[1, 5, 9], &Options::default()).unwrap();
        assert!(rep.errors.iter().all(|e| *e < 1e-12));

        let (sym, bs) = setup(&b, "cos(theta)");
        let rep = averaging_experiment(&b, &sym, &bs, &[3, 30], &Options::default()).unwrap();
        assert!(rep.values.iter().all(|v| v.abs() < 1e-12) && rep.target.abs() < 1e-15);
    }

    #[test]
    fn szego_examples() {
        let b = MomentSpace::bergman();
        let sq = TestFunction::parse("x^2").unwrap();
        let (sym, bs) = setup(&b, "r^2");
        let rep = szego_experiment(&b, &sym, &bs, &sq, &[1, 8], &Options::default()).unwrap();
        assert!((rep.values[0] - 0.3472222222).abs() < 1e-10);
        assert!((rep.target - 1.0).abs() < 1e-15);
        assert_eq!(rep.deviations.as_ref().unwrap().len(), 2);

        let (sym, bs) = setup(&b, "-0.25");
        let psi = TestFunction::parse("exp(x)").unwrap();
        let rep = szego_experiment(&b, &sym, &bs, &psi, &[2, 4, 8], &Options::default()).unwrap();
        assert!(rep.errors.iter().all(|e| *e < 1e-12));
        assert!(rep.deviations.is_none());
    }

    #[test]
    fn general_and_closed_form_agree() {
        let b = MomentSpace::bergman();
        let (sym, bs) = setup(&b, "cos(theta)");
        let psi = TestFunction::parse("x^2").unwrap();
        let orders = [4, 16, 48];
        let fast = szego_experiment(&b, &sym, &bs, &psi, &orders, &Options::default()).unwrap();
        let general = Options {
            assembly: Assembly::General,
            ..Options::default()
        };
        let slow = szego_experiment(&b, &sym, &bs, &psi, &orders, &general).unwrap();
        for (u, v) in fast.values.iter().zip(&slow.values) {
            assert!((u - v).abs() < 1e-7);
        }
        assert!((fast.target - 0.5).abs() < 1e-14);
    }

    #[test]
    fn weyl_windows() {
        let b = MomentSpace::bergman();
        let (sym, bs) = setup(&b, "cos(theta)");
        let orders = [16, 64];
        let inner = weyl_experiment(&b, &sym, &bs, 0.2, 0.6, &orders, &Options::default()).unwrap();
        let outer = weyl_experiment(&b, &sym, &bs, 0.1, 0.9, &orders, &Options::default()).unwrap();
        assert!(inner.fractions.iter().zip(&outer.fractions).all(|(a, b)| a <= b));
        assert!(inner.warnings.is_empty());
        let above = weyl_experiment(&b, &sym, &bs, 1.5, 2.5, &orders, &Options::default()).unwrap();
        assert!(above.fractions.iter().all(|f| *f == 0.0) && above.target == 0.0);
        let straddle = weyl_experiment(&b, &sym, &bs, -0.5, 0.5, &orders, &Options::default()).unwrap();
        assert_eq!(straddle.warnings.len(), 1);
        let (c, cb) = setup(&b, "1");
        let flat = weyl_experiment(&b, &c, &cb, 0.5, 1.0, &orders, &Options::default()).unwrap();
        assert!(flat.warnings.iter().any(|w| w.contains("fraction")));
        assert!(weyl_experiment(&b, &sym, &bs, 1.0, 1.0, &orders, &Options::default()).is_err());
    }

    #[test]
    fn measures_examples() {
        let b = MomentSpace::bergman();
        let rep = measures_experiment(&b, 0.5, &[1, 2], &[0, 1, 2, 3]).unwrap();
        assert!((rep.mass_below[0] - 0.25).abs() < 1e-12);
        assert!(rep.mass_nonincreasing && rep.ratio_columns.iter().all(|c| c.nondecreasing));
        let f = MomentSpace::fock();
        let rep = measures_experiment(&f, 1.0, &[2], &[200]).unwrap();
        assert!((rep.ratio_columns[0].ratios[0] - (201.0f64 / 202.0).sqrt()).abs() < 1e-6);
        assert!(measures_experiment(&b, 0.5, &[0], &[1]).is_err());
        let csv = rep.to_csv();
        assert!(csv.starts_with("n,mass_below,ratio_m2\n200,"));
    }

    #[test]
    fn schedule_validation() {
        let b = MomentSpace::bergman();
        let (sym, bs) = setup(&b, "r^2");
        for bad in [&[][..], &[0, 4][..], &[8, 4][..], &[4, 4][..]] {
            assert!(averaging_experiment(&b, &sym, &bs, bad, &Options::default()).is_err());
        }
        assert_eq!(default_orders(), vec![16, 32, 64, 128, 256, 512, 1024]);
    }

    #[test]
    fn csv_layout() {
        let b = MomentSpace::bergman();
        let (sym, bs) = setup(&b, "r^2");
        let psi = TestFunction::identity();
        let rep = szego_experiment(&b, &sym, &bs, &psi, &[1], &Options::default()).unwrap();
        let csv = rep.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("N,value,target,error,deviation"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "1");
        let v: f64 = row[1].parse().unwrap();
        assert_eq!(v, rep.values[0]);
    }
}
