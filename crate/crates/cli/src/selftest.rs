//! Closed-form oracle checks run by `szego selftest`.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use szego_core::moments::MomentSpace;
use szego_core::quad::{angle, trapezoid_periodic};
use szego_core::spectra::Spectrum;
use szego_core::symbol::BoundarySymbol;
use szego_core::toeplitz::{assemble_angle_only, CompressedMatrix, Provenance};

type Check = fn() -> Result<(), String>;

fn close(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{name}: got {got:e}, want {want:e} (tol {tol:e})"))
    }
}

fn core<T>(r: szego_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn bergman_moments() -> Result<(), String> {
    let b = MomentSpace::bergman();
    for n in 0..=1000 {
        close(&format!("ln c_{n}"), core(b.log_moment(n))?, (2.0 / (n as f64 + 1.0)).ln(), 1e-10)?;
    }
    Ok(())
}

fn fock_moments() -> Result<(), String> {
    let f = MomentSpace::fock();
    let mut ln_fact = 0.0;
    for n in 0..=1000usize {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let got = core(f.log_moment(2 * n + 1))?;
        close(&format!("ln c_{}", 2 * n + 1), got, ln_fact, 1e-10 * ln_fact.max(1.0))?;
    }
    Ok(())
}

fn two_by_two() -> Result<(), String> {
    let a = 2f64.sqrt() / 3.0;
    let z = Complex64::new(0.0, 0.0);
    let m = core(CompressedMatrix::from_entries(
        1,
        vec![z, Complex64::new(a, 0.0), Complex64::new(a, 0.0), z],
        Provenance::ClosedFormAngleOnly,
    ))?;
    let sp = core(Spectrum::compute(&m))?;
    close("lambda_0", sp.eigenvalues[0], -a, 1e-12)?;
    close("lambda_1", sp.eigenvalues[1], a, 1e-12)
}

fn trapezoid_orthogonality() -> Result<(), String> {
    let m = 64;
    for j in -8i32..=8 {
        for k in -8i32..=8 {
            let d = f64::from(j - k);
            let re = trapezoid_periodic::<_, ()>(|t| Ok((d * t).cos()), m).map_err(|_| "trapezoid")?;
            let im = trapezoid_periodic::<_, ()>(|t| Ok((d * t).sin()), m).map_err(|_| "trapezoid")?;
            let want = if j == k { 1.0 } else { 0.0 };
            close(&format!("<e_{j}, e_{k}>"), re, want, 1e-14)?;
            close(&format!("<e_{j}, e_{k}> imag"), im, 0.0, 1e-14)?;
        }
    }
    close("angle grid", angle(m / 2, m), std::f64::consts::PI, 1e-15)
}

fn bergman_cosine_entry() -> Result<(), String> {
    let b = MomentSpace::bergman();
    let cos = core(BoundarySymbol::parse("cos(theta)"))?;
    let m = core(assemble_angle_only(&b, &cos, 1, b.quad()))?;
    close("A[0][1]", m.get(0, 1).re, 2f64.sqrt() / 3.0, 1e-12)
}

fn fock_mass() -> Result<(), String> {
    let f = MomentSpace::fock();
    close("mu_0([0,1))", core(f.measure(0).mass_below(1.0))?, 1.0 - (-1f64).exp(), 1e-8)
}

/// Cauchy interlacing for a seeded random Hermitian matrix and its leading block.
fn random_interlacing(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 24;
    let mut e = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        e[k * n + k] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
        for l in k + 1..n {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            e[k * n + l] = z;
            e[l * n + k] = z.conj();
        }
    }
    let a = core(CompressedMatrix::from_entries(n - 1, e, Provenance::QuadratureGeneral))?;
    let full = core(Spectrum::compute(&a))?;
    let sub = core(Spectrum::compute(&core(a.principal(n - 2))?))?;
    for j in 0..n - 1 {
        let (lo, mid, hi) = (full.eigenvalues[j], sub.eigenvalues[j], full.eigenvalues[j + 1]);
        if !(lo <= mid + 1e-10 && mid <= hi + 1e-10) {
            return Err(format!("seed {seed}: interlacing fails at j={j}: {lo} {mid} {hi}"));
        }
    }
    close("trace", full.eigenvalues.iter().sum(), a.trace(), 1e-10)
}

const CHECKS: &[(&str, Check)] = &[
    ("bergman-moments", bergman_moments),
    ("fock-moments", fock_moments),
    ("hermitian-2x2", two_by_two),
    ("trapezoid-orthogonality", trapezoid_orthogonality),
    ("bergman-cosine-entry", bergman_cosine_entry),
    ("fock-mass-below", fock_mass),
];

fn report<W: Write>(out: &mut W, name: &str, result: Result<(), String>) -> bool {
    match result {
        Ok(()) => {
            let _ = writeln!(out, "PASS {name}");
            true
        }
        Err(msg) => {
            let _ = writeln!(out, "FAIL {name}: {msg}");
            false
        }
    }
}

/// Runs every check, printing one line each. Returns the failure count.
pub fn run<W: Write>(out: &mut W, seed: u64) -> usize {
    let mut failed = 0;
    for (name, check) in CHECKS {
        if !report(out, name, check()) {
            failed += 1;
        }
    }
    if !report(out, "random-hermitian-interlacing", random_interlacing(seed)) {
        failed += 1;
    }
    failed
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        let mut buf = Vec::new();
        for seed in [0, 1, 99] {
            buf.clear();
            assert_eq!(super::run(&mut buf, seed), 0, "{}", String::from_utf8_lossy(&buf));
            assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().count(), super::CHECKS.len() + 1);
        }
    }
}
