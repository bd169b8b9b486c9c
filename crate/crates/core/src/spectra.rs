//! Eigenvalues of compressed matrices.
//!
//! The Hermitian matrix is reduced to tridiagonal form with Hermitian
//! Householder reflectors, the complex off-diagonal is rotated to its modulus
//! by a diagonal unitary, and the real symmetric tridiagonal is diagonalized
//! by implicit QL with Wilkinson-type shifts. A few eigenpairs are spot
//! checked by inverse iteration and back transformation.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::symbol::TestFunction;
use crate::toeplitz::{CompressedMatrix, Provenance};

/// Relative Hermiticity defect above which a matrix is refused.
pub const HERMITICITY_TOL: f64 = 1e-9;
/// Residual bound factor: probes must satisfy `|Av - lv| <= 1e-10 (N+1) max|A|`.
pub const RESIDUAL_FACTOR: f64 = 1e-10;
const PROBES: usize = 5;
const PROBE_SEED: u64 = 0x5eed_0001;

/// Sorted eigenvalues of `P_N T_sigma P_N`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Spectrum {
    pub order: usize,
    pub eigenvalues: Vec<f64>,
    /// Largest relative probe residual `|Av - lv| / (max|A| |v|)`.
    pub residual: f64,
}

impl Spectrum {
    pub fn compute(matrix: &CompressedMatrix) -> Result<Spectrum> {
        let defect = matrix.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(Error::NotHermitian { defect });
        }
        if matrix.provenance() == Provenance::DiagonalRadial {
            let mut eigenvalues: Vec<f64> = (0..matrix.dim()).map(|k| matrix.get(k, k).re).collect();
            eigenvalues.sort_by(f64::total_cmp);
            return Ok(Spectrum {
                order: matrix.order(),
                eigenvalues,
                residual: 0.0,
            });
        }
        let tri = Tridiagonal::reduce(matrix);
        let cap = 50 * matrix.dim();
        let mut eigenvalues = tridiagonal_eigenvalues(&tri.diag, &tri.offdiag_abs(), cap)?;
        eigenvalues.sort_by(f64::total_cmp);

        let scale = matrix.max_abs();
        let residual = if scale == 0.0 {
            0.0
        } else {
            probe_residual(matrix, &tri, &eigenvalues)? / scale
        };
        let bound = RESIDUAL_FACTOR * matrix.dim() as f64;
        if residual > bound {
            return Err(Error::Residual { residual, bound });
        }
        Ok(Spectrum {
            order: matrix.order(),
            eigenvalues,
            residual,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// `sum_j psi(lambda_j)`.
    pub fn trace_psi(&self, psi: &TestFunction) -> Result<f64> {
        let mut acc = 0.0;
        for &l in &self.eigenvalues {
            acc += psi.eval(l)?;
        }
        Ok(acc)
    }

    /// Number of eigenvalues with `alpha < lambda < beta`, and that number
    /// divided by `N + 1`.
    pub fn count_in(&self, alpha: f64, beta: f64) -> (usize, f64) {
        let lo = self.eigenvalues.partition_point(|&l| l <= alpha);
        let hi = self.eigenvalues.partition_point(|&l| l < beta);
        let count = hi.saturating_sub(lo);
        (count, count as f64 / self.eigenvalues.len().max(1) as f64)
    }

    /// `j,lambda` rows with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,lambda\n");
        for (j, l) in self.eigenvalues.iter().enumerate() {
            let _ = writeln!(out, "{j},{l:.16e}");
        }
        out
    }
}

/// Householder reduction `A = Q T Q*` with `Q = H_0 H_1 ... H_{n-3}`.
struct Tridiagonal {
    diag: Vec<f64>,
    offdiag: Vec<Complex64>,
    /// `(u, tau)` for `H_k = I - tau u u*` acting on indices `k+1..n`.
    reflectors: Vec<(Vec<Complex64>, f64)>,
}

impl Tridiagonal {
    fn reduce(matrix: &CompressedMatrix) -> Tridiagonal {
        let n = matrix.dim();
        // symmetrized working copy
        let mut a: Vec<Complex64> = (0..n * n)
            .map(|idx| {
                let (k, l) = (idx / n, idx % n);
                (matrix.get(k, l) + matrix.get(l, k).conj()) * 0.5
            })
            .collect();
        let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
        for k in 0..n.saturating_sub(2) {
            let m = n - k - 1;
            let alpha = a[(k + 1) * n + k];
            let tail: f64 = (k + 2..n).map(|i| a[i * n + k].norm_sqr()).sum();
            if tail == 0.0 {
                reflectors.push((Vec::new(), 0.0));
                continue;
            }
            let xnorm = (alpha.norm_sqr() + tail).sqrt();
            let phase = if alpha.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                alpha / alpha.norm()
            };
            let mut u: Vec<Complex64> = (k + 1..n).map(|i| a[i * n + k]).collect();
            u[0] += phase * xnorm;
            let tau = 1.0 / (xnorm * (xnorm + alpha.norm()));

            // p = tau B u, w = p - (tau/2)(u* p) u
            let off = k + 1;
            let p: Vec<Complex64> = a
                .par_chunks(n)
                .skip(off)
                .map(|row| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (b, ui) in row[off..].iter().zip(&u) {
                        acc += b * ui;
                    }
                    acc * tau
                })
                .collect();
            let upk: f64 = u.iter().zip(&p).map(|(ui, pi)| (ui.conj() * pi).re).sum();
            let half = 0.5 * tau * upk;
            let w: Vec<Complex64> = p.iter().zip(&u).map(|(pi, ui)| pi - ui * half).collect();
            a.par_chunks_mut(n).skip(off).enumerate().for_each(|(i, row)| {
                let (ui, wi) = (u[i], w[i]);
                for (j, b) in row[off..].iter_mut().enumerate() {
                    *b -= ui * w[j].conj() + wi * u[j].conj();
                }
            });
            let beta = -phase * xnorm;
            a[(k + 1) * n + k] = beta;
            a[k * n + k + 1] = beta.conj();
            for i in k + 2..n {
                a[i * n + k] = Complex64::new(0.0, 0.0);
                a[k * n + i] = Complex64::new(0.0, 0.0);
            }
            debug_assert_eq!(u.len(), m);
            reflectors.push((u, tau));
        }
        let diag = (0..n).map(|k| a[k * n + k].re).collect();
        let offdiag = (0..n.saturating_sub(1)).map(|k| a[(k + 1) * n + k]).collect();
        Tridiagonal {
            diag,
            offdiag,
            reflectors,
        }
    }

    fn offdiag_abs(&self) -> Vec<f64> {
        self.offdiag.iter().map(|z| z.norm()).collect()
    }

    /// Maps an eigenvector of the real tridiagonal to one of `A`.
    fn back_transform(&self, y: &[f64]) -> Vec<Complex64> {
        let mut z = Vec::with_capacity(y.len());
        let mut d = Complex64::new(1.0, 0.0);
        for (k, &yk) in y.iter().enumerate() {
            if k > 0 {
                let e = self.offdiag[k - 1];
                if e.norm() > 0.0 {
                    d *= e / e.norm();
                }
            }
            z.push(d * yk);
        }
        for (k, (u, tau)) in self.reflectors.iter().enumerate().rev() {
            if *tau == 0.0 {
                continue;
            }
            let seg = &mut z[k + 1..];
            let mut dot = Complex64::new(0.0, 0.0);
            for (ui, zi) in u.iter().zip(seg.iter()) {
                dot += ui.conj() * zi;
            }
            let f = dot * *tau;
            for (ui, zi) in u.iter().zip(seg.iter_mut()) {
                *zi -= ui * f;
            }
        }
        z
    }
}

/// Eigenvalues (unsorted) of the symmetric tridiagonal with diagonal `diag`
/// and off-diagonal `offdiag`, by implicit QL. `max_sweeps` bounds the total
/// number of QL sweeps.
pub fn tridiagonal_eigenvalues(diag: &[f64], offdiag: &[f64], max_sweeps: usize) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if offdiag.len() + 1 != n {
        return Err(Error::InvalidArgument("off-diagonal length must be n - 1".into()));
    }
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut sweeps = 0usize;
    for l in 0..n {
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > max_sweeps {
                return Err(Error::NoConvergence { iterations: sweeps });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// Tridiagonal LU with partial pivoting, for inverse iteration.
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(diag: &[f64], off: &[f64], shift: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|x| x - shift).collect();
        let mut dl = off.to_vec();
        let mut du = off.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        TridiagonalLu {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            if i + 1 < n {
                v -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                v -= self.du2[i] * b[i + 2];
            }
            b[i] = v / self.d[i];
        }
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Largest `|Av - lv| / |v|` over a seeded selection of eigenpairs.
fn probe_residual(matrix: &CompressedMatrix, tri: &Tridiagonal, eigenvalues: &[f64]) -> Result<f64> {
    let n = matrix.dim();
    let off = tri.offdiag_abs();
    let norm_t = tri
        .diag
        .iter()
        .map(|x| x.abs())
        .chain(off.iter().copied())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let mut picks: Vec<usize> = vec![0, n - 1];
    while picks.len() < PROBES.min(n) + 2 {
        picks.push(rng.gen_range(0..n));
    }
    picks.sort_unstable();
    picks.dedup();
    let mut worst = 0.0f64;
    for idx in picks {
        let lambda = eigenvalues[idx];
        let lu = TridiagonalLu::factor(&tri.diag, &off, lambda, f64::EPSILON * norm_t);
        let mut y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..3 {
            lu.solve(&mut y);
            normalize(&mut y);
        }
        let v = tri.back_transform(&y);
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let res: f64 = (0..n)
            .map(|k| {
                let row = &matrix.entries()[k * n..(k + 1) * n];
                let mut acc = -v[k] * lambda;
                for (a, vj) in row.iter().zip(&v) {
                    acc += a * vj;
                }
                acc.norm_sqr()
            })
            .sum::<f64>()
            .sqrt();
        worst = worst.max(res / vnorm);
    }
    if !worst.is_finite() {
        return Err(Error::Residual {
            residual: worst,
            bound: RESIDUAL_FACTOR * n as f64,
        });
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};
    use std::f64::consts::PI;

    fn hermitian(n: usize, seed: u64) -> CompressedMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e = vec![Complex64::new(0.0, 0.0); n * n];
        for k in 0..n {
            e[k * n + k] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
            for l in k + 1..n {
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                e[k * n + l] = z;
                e[l * n + k] = z.conj();
            }
        }
        CompressedMatrix::from_entries(n - 1, e, Provenance::QuadratureGeneral).unwrap()
    }

    #[test]
    fn two_by_two() {
        let s = 2f64.sqrt() / 3.0;
        let z = Complex64::new(0.0, 0.0);
        let a = CompressedMatrix::from_entries(
            1,
            vec![z, Complex64::new(s, 0.0), Complex64::new(s, 0.0), z],
            Provenance::ClosedFormAngleOnly,
        )
        .unwrap();
        let sp = Spectrum::compute(&a).unwrap();
        assert!((sp.eigenvalues[0] + s).abs() < 1e-15 && (sp.eigenvalues[1] - s).abs() < 1e-15);
    }

    fn diagonal(values: &[f64], provenance: Provenance) -> CompressedMatrix {
        let n = values.len();
        let mut e = vec![Complex64::new(0.0, 0.0); n * n];
        for (k, v) in values.iter().enumerate() {
            e[k * n + k] = Complex64::new(*v, 0.0);
        }
        CompressedMatrix::from_entries(n - 1, e, provenance).unwrap()
    }

    #[test]
    fn diagonal_examples() {
        for prov in [Provenance::QuadratureGeneral, Provenance::DiagonalRadial] {
            let sp = Spectrum::compute(&diagonal(&[1.0; 5], prov)).unwrap();
            assert!(sp.eigenvalues.iter().all(|l| (l - 1.0).abs() < 1e-13));
            let sp = Spectrum::compute(&diagonal(&[0.75, 0.5, 2.0 / 3.0], prov)).unwrap();
            for (l, want) in sp.eigenvalues.iter().zip([0.5, 2.0 / 3.0, 0.75]) {
                assert!((l - want).abs() < 1e-13);
            }
            assert_eq!(sp.count_in(0.6, 0.8), (2, 2.0 / 3.0));
            assert_eq!(sp.count_in(1.75, 2.75), (0, 0.0));
        }
    }

    #[test]
    fn trace_psi_examples() {
        let s = 2f64.sqrt() / 3.0;
        let sp = Spectrum {
            order: 1,
            eigenvalues: vec![-s, s],
            residual: 0.0,
        };
        let sq = TestFunction::parse("x^2").unwrap();
        assert!((sp.trace_psi(&sq).unwrap() - 4.0 / 9.0).abs() < 1e-12);
        assert!(sp.trace_psi(&TestFunction::identity()).unwrap().abs() < 1e-13);
        assert_eq!(sp.trace_psi(&TestFunction::parse("1").unwrap()).unwrap(), 2.0);
        assert!(sp.trace_psi(&TestFunction::parse("log(x)").unwrap()).is_err());
    }

    #[test]
    fn discrete_laplacian() {
        let n = 200;
        let ev = tridiagonal_eigenvalues(&vec![2.0; n], &vec![-1.0; n - 1], 50 * n).unwrap();
        let mut ev = ev;
        ev.sort_by(f64::total_cmp);
        for (k, l) in ev.iter().enumerate() {
            let want = 2.0 - 2.0 * ((k + 1) as f64 * PI / (n + 1) as f64).cos();
            assert!((l - want).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_cap() {
        let err = tridiagonal_eigenvalues(&[1.0, 2.0, 3.0], &[1.0, 1.0], 0).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn refuses_non_hermitian() {
        let mut a = hermitian(4, 1);
        let mut e = a.entries().to_vec();
        e[1] += Complex64::new(1e-6, 0.0);
        a = CompressedMatrix::from_entries(3, e, Provenance::QuadratureGeneral).unwrap();
        assert!(matches!(Spectrum::compute(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn counting_is_strict() {
        let sp = Spectrum {
            order: 3,
            eigenvalues: vec![-1.0, 0.0, 0.0, 1.0],
            residual: 0.0,
        };
        assert_eq!(sp.count_in(-1.0, 1.0), (2, 0.5));
        assert_eq!(sp.count_in(0.0, 1.0), (0, 0.0));
        assert_eq!(sp.count_in(-2.0, 2.0), (4, 1.0));
        assert_eq!(sp.count_in(1.0, -1.0), (0, 0.0));
        assert!(sp.to_csv().starts_with("j,lambda\n0,-1.0000000000000000e0\n"));
    }

    #[test]
    fn residual_is_small() {
        let a = hermitian(120, 7);
        let sp = Spectrum::compute(&a).unwrap();
        assert!(sp.residual < 1e-12, "{}", sp.residual);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn trace_frobenius_interlacing(n in 2usize..40, seed in any::<u64>()) {
            let a = hermitian(n, seed);
            let sp = Spectrum::compute(&a).unwrap();
            let sum: f64 = sp.eigenvalues.iter().sum();
            prop_assert!((sum - a.trace()).abs() < 1e-10 * n as f64);
            let sq: f64 = sp.eigenvalues.iter().map(|l| l * l).sum();
            prop_assert!((sq - a.frobenius_sq()).abs() < 1e-9 * a.frobenius_sq().max(1.0));
            let sub = Spectrum::compute(&a.principal(n - 2).unwrap()).unwrap();
            for j in 0..n - 1 {
                prop_assert!(sp.eigenvalues[j] <= sub.eigenvalues[j] + 1e-10);
                prop_assert!(sub.eigenvalues[j] <= sp.eigenvalues[j + 1] + 1e-10);
            }
        }
    }
}
