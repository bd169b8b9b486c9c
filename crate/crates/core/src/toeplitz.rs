//! Matrices of the compressed Toeplitz operator `P_N T_sigma P_N` in the
//! orthonormal basis `e_n = z^n / sqrt(c_{2n+1})`, `n = 0..=N`.
//!
//! Entry `(k, l)` is `<T_sigma e_l, e_k>`
//! `= (c_{2k+1} c_{2l+1})^{-1/2} int_0^R sigma_hat_{k-l}(r) r^{k+l+1} mu(r) dr`,
//! computed as a normalized expectation against `r^{k+l+1} mu(r) / c_{k+l+1}`
//! times the log-domain factor `c_{k+l+1} / sqrt(c_{2k+1} c_{2l+1})`. Only the
//! upper triangle is computed; the lower triangle is its conjugate mirror.

use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::moments::{Kernel, MomentSpace, RadialGrid};
use crate::quad::QuadConfig;
use crate::symbol::{
    effective_samples, AngularTransform, BoundarySymbol, Classification, Symbol,
};

/// Default ceiling on the truncation order.
pub const MAX_ORDER: usize = 4096;

const MAGIC: &[u8; 4] = b"RCTM";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedFormAngleOnly,
    QuadratureGeneral,
    DiagonalRadial,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::ClosedFormAngleOnly => "closed-form-angle-only",
            Provenance::QuadratureGeneral => "quadrature-general",
            Provenance::DiagonalRadial => "diagonal-radial",
        }
    }

    fn code(self) -> u32 {
        match self {
            Provenance::ClosedFormAngleOnly => 0,
            Provenance::QuadratureGeneral => 1,
            Provenance::DiagonalRadial => 2,
        }
    }

    fn from_code(code: u32) -> Option<Self> {
        Some(match code {
            0 => Provenance::ClosedFormAngleOnly,
            1 => Provenance::QuadratureGeneral,
            2 => Provenance::DiagonalRadial,
            _ => return None,
        })
    }
}

/// Dense `(N+1) x (N+1)` Hermitian matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedMatrix {
    order: usize,
    entries: Vec<Complex64>,
    provenance: Provenance,
}

impl CompressedMatrix {
    /// Builds a matrix from row-major entries. No Hermiticity is enforced.
    pub fn from_entries(order: usize, entries: Vec<Complex64>, provenance: Provenance) -> Result<Self> {
        let n = order + 1;
        if entries.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "{} entries for order {order}",
                entries.len()
            )));
        }
        Ok(CompressedMatrix {
            order,
            entries,
            provenance,
        })
    }

    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Matrix dimension `N + 1`.
    pub fn dim(&self) -> usize {
        self.order + 1
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.entries[k * self.dim() + l]
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |A[k][l] - conj(A[l][k])| / max |A|` (0 for the zero matrix).
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for k in 0..n {
            for l in k..n {
                worst = worst.max((self.get(k, l) - self.get(l, k).conj()).norm());
            }
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|k| self.get(k, k).re).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// The leading `(order+1) x (order+1)` block.
    pub fn principal(&self, order: usize) -> Result<CompressedMatrix> {
        if order > self.order {
            return Err(Error::InvalidArgument(format!(
                "order {order} exceeds {}",
                self.order
            )));
        }
        let n = order + 1;
        let mut entries = Vec::with_capacity(n * n);
        for k in 0..n {
            entries.extend_from_slice(&self.entries[k * self.dim()..k * self.dim() + n]);
        }
        Ok(CompressedMatrix {
            order,
            entries,
            provenance: self.provenance,
        })
    }

    /// `{order, dimension, provenance, entries: [[re, im], ...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "order": self.order,
            "dimension": self.dim(),
            "provenance": self.provenance.as_str(),
            "entries": self.entries.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        })
    }

    /// Binary form: `RCTM`, version, order, flags (all `u32` LE), then
    /// row-major `(re, im)` pairs of `f64` LE.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        let order = u32::try_from(self.order)
            .map_err(|_| Error::InvalidArgument("order does not fit in u32".into()))?;
        w.write_all(&order.to_le_bytes())?;
        w.write_all(&self.provenance.code().to_le_bytes())?;
        for z in &self.entries {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[0..4] != MAGIC {
            return Err(Error::InvalidArgument("not an RCTM matrix file".into()));
        }
        let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("4 bytes"));
        if word(4) != FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported version {}", word(4))));
        }
        let order = word(8) as usize;
        let provenance = Provenance::from_code(word(12))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown flags {}", word(12))))?;
        let n = order + 1;
        let mut entries = Vec::with_capacity(n * n);
        let mut buf = [0u8; 16];
        for _ in 0..n * n {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[0..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(buf[8..16].try_into().expect("8 bytes"));
            entries.push(Complex64::new(re, im));
        }
        Ok(CompressedMatrix {
            order,
            entries,
            provenance,
        })
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "order {order} exceeds the ceiling {MAX_ORDER}"
        )));
    }
    Ok(())
}

/// `ln c_j` for `j = 0..=max`.
fn log_moments(space: &MomentSpace, max: usize) -> Result<Vec<f64>> {
    (0..=max).map(|j| space.log_moment(j)).collect()
}

/// Fills the upper triangle row by row in parallel and mirrors it.
fn fill_hermitian<F>(order: usize, provenance: Provenance, entry: F) -> Result<CompressedMatrix>
where
    F: Fn(usize, usize) -> Result<Complex64> + Sync,
{
    let n = order + 1;
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|k| (k..n).map(|l| entry(k, l)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for (k, row) in rows.into_iter().enumerate() {
        for (off, z) in row.into_iter().enumerate() {
            let l = k + off;
            if l == k {
                entries[k * n + k] = Complex64::new(z.re, 0.0);
            } else {
                entries[k * n + l] = z;
                entries[l * n + k] = z.conj();
            }
        }
    }
    Ok(CompressedMatrix {
        order,
        entries,
        provenance,
    })
}

/// Closed-form assembly for a symbol depending only on the angle:
/// `A[k][l] = h(k - l) c_{k+l+1} / sqrt(c_{2k+1} c_{2l+1})`.
pub fn assemble_angle_only(
    space: &MomentSpace,
    bsym: &BoundarySymbol,
    order: usize,
    quad: &QuadConfig,
) -> Result<CompressedMatrix> {
    check_order(order)?;
    let h = bsym.coefficients(order, quad.angular_samples)?;
    let lm = log_moments(space, 2 * order + 1)?;
    fill_hermitian(order, Provenance::ClosedFormAngleOnly, |k, l| {
        let factor = (lm[k + l + 1] - 0.5 * lm[2 * k + 1] - 0.5 * lm[2 * l + 1]).exp();
        // h(k - l) = conj h(l - k) for real boundary functions
        Ok(h[l - k].conj() * factor)
    })
}

/// Normalized kernels `r^j r mu(r) / c_{j+1}` for `j = 0..=max_j`.
fn kernels(grid: &RadialGrid, lm: &[f64], max_j: usize) -> Vec<Kernel> {
    (0..=max_j)
        .into_par_iter()
        .map(|j| grid.kernel(j, lm[j + 1]))
        .collect()
}

/// `int sigma_hat_0(r) d mu_n(r)` for `n = 0..=order`: the diagonal of the
/// compressed matrix, whose sum is its trace.
pub fn diagonal_expectations(
    space: &MomentSpace,
    sym: &Symbol,
    order: usize,
    quad: &QuadConfig,
) -> Result<Vec<f64>> {
    let grid = space.grid(2 * order)?;
    let samples = if sym.classification().is_radial() {
        1
    } else {
        quad.angular_samples
    };
    let mean: Vec<f64> = grid
        .r
        .par_iter()
        .map(|&r| {
            let mut acc = 0.0;
            for j in 0..samples {
                acc += sym.eval(r, crate::quad::angle(j, samples))?;
            }
            Ok(acc / samples as f64)
        })
        .collect::<Result<_>>()?;
    (0..=order)
        .into_par_iter()
        .map(|n| Ok(space.measure(n).kernel(&grid)?.apply(&mean)))
        .collect()
}

/// Diagonal assembly for a radial symbol: entry `n` is `int sigma d mu_n`.
pub fn assemble_radial(
    space: &MomentSpace,
    sym: &Symbol,
    order: usize,
    quad: &QuadConfig,
) -> Result<CompressedMatrix> {
    check_order(order)?;
    if !sym.classification().is_radial() {
        return Err(Error::InvalidArgument(format!(
            "'{}' is not a radial symbol",
            sym.source()
        )));
    }
    let diag = diagonal_expectations(space, sym, order, quad)?;
    let n = order + 1;
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for (k, d) in diag.into_iter().enumerate() {
        entries[k * n + k] = Complex64::new(d, 0.0);
    }
    Ok(CompressedMatrix {
        order,
        entries,
        provenance: Provenance::DiagonalRadial,
    })
}

/// Quadrature assembly for an arbitrary bounded symbol.
///
/// At every radial node the symbol is sampled once on an angular grid and
/// transformed, giving `sigma_hat_m(r)` for all `|m| <= N` at once.
pub fn assemble_general(
    space: &MomentSpace,
    sym: &Symbol,
    order: usize,
    quad: &QuadConfig,
) -> Result<CompressedMatrix> {
    check_order(order)?;
    let grid = space.grid(2 * order)?;
    let transform = AngularTransform::new(effective_samples(quad.angular_samples, order));
    let per_node: Vec<Vec<Complex64>> = grid
        .r
        .par_iter()
        .map(|&r| {
            let samples = transform.symbol_samples(sym, r)?;
            Ok(transform.coefficients(&samples, order))
        })
        .collect::<Result<_>>()?;
    // coef[d][i] = conj(sigma_hat_d(r_i)) = sigma_hat_{-d}(r_i)
    let nodes = grid.len();
    let mut coef = vec![vec![Complex64::new(0.0, 0.0); nodes]; order + 1];
    for (i, c) in per_node.into_iter().enumerate() {
        for (d, z) in c.into_iter().enumerate() {
            coef[d][i] = z.conj();
        }
    }
    let lm = log_moments(space, 2 * order + 1)?;
    let kern = kernels(&grid, &lm, 2 * order);
    fill_hermitian(order, Provenance::QuadratureGeneral, |k, l| {
        let kj = &kern[k + l];
        let vals = &coef[l - k][kj.start..kj.start + kj.weights.len()];
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, z) in kj.weights.iter().zip(vals) {
            acc += z * *w;
        }
        let factor = (lm[k + l + 1] - 0.5 * lm[2 * k + 1] - 0.5 * lm[2 * l + 1]).exp();
        Ok(acc * factor)
    })
}

/// Picks the assembly path from the symbol's classification.
pub fn assemble(
    space: &MomentSpace,
    sym: &Symbol,
    order: usize,
    quad: &QuadConfig,
) -> Result<CompressedMatrix> {
    match sym.classification() {
        Classification::Constant | Classification::Angular => {
            let bsym = BoundarySymbol::from_angular(sym)?;
            assemble_angle_only(space, &bsym, order, quad)
        }
        Classification::Radial => assemble_radial(space, sym, order, quad),
        Classification::General => assemble_general(space, sym, order, quad),
    }
}

/// `D_N = (1/(N+1)) sum_n int [(1/2pi) int |sigma(r e^{it}) - sigma~(t)| dt] d mu_n(r)`.
pub fn symbol_deviation(
    space: &MomentSpace,
    sym: &Symbol,
    bsym: &BoundarySymbol,
    order: usize,
    quad: &QuadConfig,
) -> Result<f64> {
    let grid = space.grid(2 * order)?;
    let m = quad.angular_samples;
    let boundary = bsym.samples(m)?;
    let dev: Vec<f64> = grid
        .r
        .par_iter()
        .map(|&r| {
            let mut acc = 0.0;
            for (j, b) in boundary.iter().enumerate() {
                acc += (sym.eval(r, crate::quad::angle(j, m))? - b).abs();
            }
            Ok(acc / m as f64)
        })
        .collect::<Result<_>>()?;
    let per_n: Vec<f64> = (0..=order)
        .into_par_iter()
        .map(|n| Ok(space.measure(n).kernel(&grid)?.apply(&dev)))
        .collect::<Result<_>>()?;
    Ok(per_n.iter().sum::<f64>() / (order + 1) as f64)
}
