use std::io::Write;
use std::path::Path;

use serde_json::json;
use szego_core::moments::{MomentSpace, Radius};
use szego_core::quad::QuadConfig;
use szego_core::spectra::Spectrum;
use szego_core::symbol::{radial_limit, BoundarySymbol, RadialLimitStrategy, Symbol, TestFunction};
use szego_core::szego::{self, fmt17, Assembly, Options, Series};
use szego_core::toeplitz;

use crate::config::{ConfigError, Format, Params, RadiusArg, Schedule};
use crate::{plot, selftest};

pub const DEFAULT_SYMBOL: &str = "cos(theta)";
pub const DEFAULT_ORDER: usize = 16;
pub const DEFAULT_PSI: &str = "x";
pub const DEMO_SYMBOL: &str = "r*theta";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] szego_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0} self-test check(s) failed")]
    Selftest(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::Selftest(_) => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn quad(p: &Params) -> Result<QuadConfig> {
    let d = QuadConfig::default();
    let q = QuadConfig {
        radial_nodes: p.radial_nodes.unwrap_or(d.radial_nodes),
        radial_panels: p.radial_panels.unwrap_or(d.radial_panels),
        angular_samples: p.angular_samples.unwrap_or(d.angular_samples),
        tail_tol: p.tail_tol.unwrap_or(d.tail_tol),
    };
    q.validate()?;
    Ok(q)
}

fn space(p: &Params, q: QuadConfig) -> Result<MomentSpace> {
    let name = p.space.as_deref().unwrap_or("bergman");
    let fixed = |name: &str| -> Result<()> {
        if p.radius.is_some() || p.density.is_some() {
            return Err(CliError::Usage(format!(
                "radius and density apply only to custom spaces, not {name}"
            )));
        }
        Ok(())
    };
    let s = match name {
        "bergman" => {
            fixed(name)?;
            MomentSpace::bergman()
        }
        "fock" => {
            fixed(name)?;
            MomentSpace::fock()
        }
        "custom" => {
            let density = p
                .density
                .as_deref()
                .ok_or_else(|| CliError::Usage("a custom space needs a density".into()))?;
            let radius = match p.radius.unwrap_or(RadiusArg::Finite(1.0)) {
                RadiusArg::Finite(r) => Radius::Finite(r),
                RadiusArg::Infinite => Radius::Infinite,
            };
            MomentSpace::custom(density, radius)?
        }
        other => return Err(CliError::Usage(format!("unknown space '{other}'"))),
    };
    let s = s.with_quad(q);
    if name == "custom" {
        for w in s.check_hypotheses(256)? {
            log::warn!("{w}");
        }
    }
    Ok(s)
}

/// Parses the symbol and checks that it is bounded on the space.
fn symbol(p: &Params, default: &str, space: &MomentSpace) -> Result<Symbol> {
    let sym = Symbol::parse(p.symbol.as_deref().unwrap_or(default))?;
    sym.bounds(space)?;
    Ok(sym)
}

fn boundary(p: &Params, sym: &Symbol, space: &MomentSpace) -> Result<BoundarySymbol> {
    let strategy = RadialLimitStrategy {
        explicit: p.boundary.clone(),
    };
    Ok(radial_limit(sym, space, &strategy)?)
}

fn orders(p: &Params, default: &str) -> Result<Vec<usize>> {
    match &p.orders {
        Some(Schedule(v)) => Ok(v.clone()),
        None => Ok(default.parse::<Schedule>().map_err(CliError::Usage)?.0),
    }
}

fn options(p: &Params, quad: QuadConfig) -> Result<Options> {
    let assembly = match p.assembly.as_deref().unwrap_or("auto") {
        "auto" => Assembly::Auto,
        "general" => Assembly::General,
        other => return Err(CliError::Usage(format!("unknown assembly '{other}'"))),
    };
    Ok(Options { quad, assembly })
}

fn write_bytes(p: &Params, target: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match target {
        Some(path) => {
            let path = p.output_path(path);
            let io = |source| CliError::Io {
                path: path.display().to_string(),
                source,
            };
            if let Some(parent) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(io)?;
            }
            std::fs::write(&path, bytes).map_err(io)
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

/// Writes the report as CSV or JSON, plus an SVG plot when requested.
fn emit_report<S: Series + serde::Serialize>(p: &Params, report: &S, csv: String) -> Result<()> {
    let text = match p.format.unwrap_or(Format::Csv) {
        Format::Csv => csv,
        Format::Json => pretty(report)?,
        Format::Bin => return Err(CliError::Usage("binary output is only for matrices".into())),
    };
    write_bytes(p, p.out.as_deref(), text.as_bytes())?;
    if let Some(path) = &p.plot {
        emit_plot(p, report, path)?;
    }
    Ok(())
}

pub fn emit_plot<S: Series>(p: &Params, report: &S, path: &Path) -> Result<()> {
    let svg = plot::render(report).ok_or_else(|| CliError::Usage("cannot plot an empty report".into()))?;
    write_bytes(p, Some(path), svg.as_bytes())
}

fn pretty<T: serde::Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Usage(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn run_moments(p: &Params) -> Result<()> {
    let q = quad(p)?;
    let space = space(p, q)?;
    let ns = orders(p, "0:32:linear:1")?;
    let rows = ns
        .iter()
        .map(|&n| Ok((n, space.log_moment(n)?, space.log_moment(2 * n + 1)?)))
        .collect::<Result<Vec<_>>>()?;
    let text = match p.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = String::from("n,log_c_n,log_c_2n_plus_1\n");
            for (n, a, b) in &rows {
                s.push_str(&format!("{n},{},{}\n", fmt17(*a), fmt17(*b)));
            }
            s
        }
        Format::Json => pretty(&json!({
            "space": space.describe(),
            "rows": rows.iter().map(|(n, a, b)| json!({"n": n, "log_c_n": a, "log_c_2n_plus_1": b})).collect::<Vec<_>>(),
        }))?,
        Format::Bin => return Err(CliError::Usage("binary output is only for matrices".into())),
    };
    write_bytes(p, p.out.as_deref(), text.as_bytes())
}

fn run_measures(p: &Params) -> Result<()> {
    let q = quad(p)?;
    let space = space(p, q)?;
    let ns = orders(p, "0:64:linear:4")?;
    let ms = p.m_list.clone().map(|s| s.0).unwrap_or_else(|| vec![1, 2, 3, 4]);
    let report = szego::measures_experiment(&space, p.r_tilde.unwrap_or(0.5), &ms, &ns)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let text = match p.format.unwrap_or(Format::Csv) {
        Format::Csv => report.to_csv(),
        Format::Json => pretty(&report)?,
        Format::Bin => return Err(CliError::Usage("binary output is only for matrices".into())),
    };
    write_bytes(p, p.out.as_deref(), text.as_bytes())
}

fn run_matrix(p: &Params) -> Result<()> {
    let q = quad(p)?;
    let space = space(p, q)?;
    let sym = symbol(p, DEFAULT_SYMBOL, &space)?;
    let n = p.order.unwrap_or(DEFAULT_ORDER);
    let opts = options(p, q)?;
    let m = match opts.assembly {
        Assembly::Auto => toeplitz::assemble(&space, &sym, n, &q)?,
        Assembly::General => toeplitz::assemble_general(&space, &sym, n, &q)?,
    };
    match p.format.unwrap_or(Format::Json) {
        Format::Json => write_bytes(p, p.out.as_deref(), pretty(&m.to_json())?.as_bytes()),
        Format::Bin => {
            let out = p
                .out
                .as_deref()
                .ok_or_else(|| CliError::Usage("binary output needs --out".into()))?;
            let mut bytes = Vec::new();
            m.write_binary(&mut bytes)?;
            write_bytes(p, Some(out), &bytes)
        }
        Format::Csv => {
            let mut s = String::from("k,l,re,im\n");
            for k in 0..m.dim() {
                for l in 0..m.dim() {
                    let z = m.get(k, l);
                    s.push_str(&format!("{k},{l},{},{}\n", fmt17(z.re), fmt17(z.im)));
                }
            }
            write_bytes(p, p.out.as_deref(), s.as_bytes())
        }
    }
}

fn run_spectrum(p: &Params) -> Result<()> {
    let q = quad(p)?;
    let space = space(p, q)?;
    let sym = symbol(p, DEFAULT_SYMBOL, &space)?;
    let n = p.order.unwrap_or(DEFAULT_ORDER);
    let m = match options(p, q)?.assembly {
        Assembly::Auto => toeplitz::assemble(&space, &sym, n, &q)?,
        Assembly::General => toeplitz::assemble_general(&space, &sym, n, &q)?,
    };
    let sp = Spectrum::compute(&m)?;
    let text = match p.format.unwrap_or(Format::Csv) {
        Format::Csv => sp.to_csv(),
        Format::Json => pretty(&sp)?,
        Format::Bin => return Err(CliError::Usage("binary output is only for matrices".into())),
    };
    write_bytes(p, p.out.as_deref(), text.as_bytes())
}

fn run_limit(p: &Params) -> Result<()> {
    let q = quad(p)?;
    let space = space(p, q)?;
    let sym = symbol(p, DEFAULT_SYMBOL, &space)?;
    let bsym = boundary(p, &sym, &space)?;
    let ns = orders(p, "16:1024:geometric")?;
    let opts = options(p, q)?;
    let report = match p.experiment.as_deref().unwrap_or("szego") {
        "szego" => {
            let psi = TestFunction::parse(p.psi.as_deref().unwrap_or(DEFAULT_PSI))?;
            szego::szego_experiment(&space, &sym, &bsym, &psi, &ns, &opts)?
        }
        "averaging" => szego::averaging_experiment(&space, &sym, &bsym, &ns, &opts)?,
        other => return Err(CliError::Usage(format!("unknown experiment '{other}'"))),
    };
    let csv = report.to_csv();
    emit_report(p, &report, csv)
}

fn run_density(p: &Params, default_symbol: &str, default_window: (f64, f64)) -> Result<()> {
    let q = quad(p)?;
    let space = space(p, q)?;
    let sym = symbol(p, default_symbol, &space)?;
    let bsym = boundary(p, &sym, &space)?;
    let ns = orders(p, "16:1024:geometric")?;
    let alpha = p.alpha.unwrap_or(default_window.0);
    let beta = p.beta.unwrap_or(default_window.1);
    let report = szego::weyl_experiment(&space, &sym, &bsym, alpha, beta, &ns, &options(p, q)?)?;
    let csv = report.to_csv();
    emit_report(p, &report, csv)
}

pub fn run(command: &str, p: &Params) -> Result<()> {
    match command {
        "moments" => run_moments(p),
        "measures" => run_measures(p),
        "matrix" => run_matrix(p),
        "spectrum" => run_spectrum(p),
        "limit" => run_limit(p),
        "density" => run_density(p, DEFAULT_SYMBOL, (0.0, 2.0)),
        "demo-equidistribution" => run_density(
            p,
            DEMO_SYMBOL,
            (std::f64::consts::FRAC_PI_2, std::f64::consts::PI),
        ),
        "selftest" => {
            let failed = selftest::run(&mut std::io::stdout().lock(), p.seed.unwrap_or(0));
            if failed > 0 {
                Err(CliError::Selftest(failed))
            } else {
                Ok(())
            }
        }
        other => Err(CliError::Usage(format!("unknown command '{other}'"))),
    }
}
