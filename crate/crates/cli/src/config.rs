//! Run parameters from flags and flat `key = value` files.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config line {line}: key '{key}': {message}")]
    Key {
        line: usize,
        key: String,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

/// An ordered list of orders: `a:b:geometric[:factor]`, `a:b:linear[:step]`,
/// a comma list, or a single integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule(pub Vec<usize>);

impl FromStr for Schedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let int = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("'{t}' is not a non-negative integer"))
        };
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if !(3..=4).contains(&parts.len()) {
                return Err(format!("schedule '{s}' must be a:b:geometric|linear[:step]"));
            }
            let (a, b) = (int(parts[0])?, int(parts[1])?);
            if a > b {
                return Err(format!("schedule '{s}' has start above end"));
            }
            let mut out = Vec::new();
            match parts[2].trim() {
                "geometric" => {
                    let factor = match parts.get(3) {
                        Some(f) => f
                            .trim()
                            .parse::<f64>()
                            .map_err(|_| format!("'{f}' is not a number"))?,
                        None => 2.0,
                    };
                    if a == 0 || !(factor > 1.0) {
                        return Err(format!(
                            "geometric schedule '{s}' needs start >= 1 and factor > 1"
                        ));
                    }
                    let mut x = a as f64;
                    while x.round() as usize <= b {
                        let v = x.round() as usize;
                        if out.last() != Some(&v) {
                            out.push(v);
                        }
                        x *= factor;
                    }
                }
                "linear" => {
                    let step = match parts.get(3) {
                        Some(t) => int(t)?,
                        None => a,
                    };
                    if step == 0 {
                        return Err(format!("linear schedule '{s}' needs a positive step"));
                    }
                    out.extend((a..=b).step_by(step));
                }
                other => return Err(format!("unknown schedule kind '{other}'")),
            }
            return Ok(Schedule(out));
        }
        let out = s.split(',').map(int).collect::<Result<Vec<_>, _>>()?;
        Ok(Schedule(out))
    }
}

/// `inf` or a positive real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusArg {
    Finite(f64),
    Infinite,
}

impl FromStr for RadiusArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "inf" | "infinity" | "Inf" => Ok(RadiusArg::Infinite),
            t => t
                .parse::<f64>()
                .map(RadiusArg::Finite)
                .map_err(|_| format!("'{t}' is neither 'inf' nor a number")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Bin,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Format as clap::ValueEnum>::from_str(s, true)
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Bin => "bin",
        })
    }
}

/// Every setting, from flags or a config file. `None` means "use the default".
#[derive(Debug, Clone, Default, Args)]
pub struct Params {
    /// bergman, fock or custom
    #[arg(long)]
    pub space: Option<String>,
    /// Radius of a custom space: a positive real or "inf"
    #[arg(long)]
    pub radius: Option<RadiusArg>,
    /// Density mu(r) of a custom space
    #[arg(long)]
    pub density: Option<String>,
    /// Symbol sigma in r, theta, x, y
    #[arg(long)]
    pub symbol: Option<String>,
    /// Explicit boundary function in theta
    #[arg(long)]
    pub boundary: Option<String>,
    /// Test function psi in x
    #[arg(long)]
    pub psi: Option<String>,
    /// Order schedule
    #[arg(long)]
    pub orders: Option<Schedule>,
    /// Truncation order N
    #[arg(long = "N", visible_alias = "order")]
    pub order: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub r_tilde: Option<f64>,
    /// Shifts m for moment ratios
    #[arg(long)]
    pub m_list: Option<Schedule>,
    #[arg(long)]
    pub radial_nodes: Option<usize>,
    #[arg(long)]
    pub radial_panels: Option<usize>,
    #[arg(long)]
    pub angular_samples: Option<usize>,
    #[arg(long)]
    pub tail_tol: Option<f64>,
    /// szego or averaging
    #[arg(long)]
    pub experiment: Option<String>,
    /// auto or general
    #[arg(long)]
    pub assembly: Option<String>,
    /// Output file (standard output when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for relative output paths
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<Format>,
    /// SVG plot path
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy)]
enum Kind {
    Str,
    Int,
    Real,
    Schedule,
    Radius,
    Format,
    Path,
}

const KEYS: &[(&str, Kind)] = &[
    ("space", Kind::Str),
    ("radius", Kind::Radius),
    ("density", Kind::Str),
    ("symbol", Kind::Str),
    ("boundary", Kind::Str),
    ("psi", Kind::Str),
    ("orders", Kind::Schedule),
    ("N", Kind::Int),
    ("order", Kind::Int),
    ("alpha", Kind::Real),
    ("beta", Kind::Real),
    ("r_tilde", Kind::Real),
    ("m_list", Kind::Schedule),
    ("radial_nodes", Kind::Int),
    ("radial_panels", Kind::Int),
    ("angular_samples", Kind::Int),
    ("tail_tol", Kind::Real),
    ("experiment", Kind::Str),
    ("assembly", Kind::Str),
    ("out", Kind::Path),
    ("out_dir", Kind::Path),
    ("format", Kind::Format),
    ("plot", Kind::Path),
    ("seed", Kind::Int),
];

enum Raw<'a> {
    Quoted(String),
    Bare(&'a str),
}

fn lex_value(text: &str) -> Result<Raw<'_>, String> {
    let t = text.trim();
    if let Some(rest) = t.strip_prefix('"') {
        let end = rest.find('"').ok_or("unterminated string")?;
        if !rest[end + 1..].trim().is_empty() {
            return Err("trailing characters after string".into());
        }
        return Ok(Raw::Quoted(rest[..end].to_string()));
    }
    if t.is_empty() {
        return Err("missing value".into());
    }
    Ok(Raw::Bare(t))
}

/// Removes a `#` comment that is not inside a string.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

impl Params {
    pub fn load(path: &Path) -> Result<Params, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Params::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Params, ConfigError> {
        let mut params = Params::default();
        let mut seen = HashSet::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let body = strip_comment(raw_line).trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected 'key = value', found '{body}'"),
            })?;
            let key = key.trim();
            let err = |message: String| ConfigError::Key {
                line,
                key: key.to_string(),
                message,
            };
            let kind = KEYS
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, kind)| *kind)
                .ok_or_else(|| err("unknown key".into()))?;
            let canonical = if key == "order" { "N" } else { key };
            if !seen.insert(canonical) {
                return Err(err("duplicate key".into()));
            }
            let raw = lex_value(value).map_err(err)?;
            params.set(key, kind, raw).map_err(err)?;
        }
        Ok(params)
    }

    fn set(&mut self, key: &str, kind: Kind, raw: Raw<'_>) -> Result<(), String> {
        let text = match (&raw, kind) {
            (Raw::Quoted(s), Kind::Str | Kind::Path | Kind::Format | Kind::Schedule | Kind::Radius) => s.as_str(),
            (Raw::Bare(s), Kind::Int | Kind::Real | Kind::Schedule | Kind::Radius) => s,
            (Raw::Bare(s), Kind::Format) => s,
            (Raw::Quoted(_), Kind::Int) => return Err("expected an integer, found a string".into()),
            (Raw::Quoted(_), Kind::Real) => return Err("expected a number, found a string".into()),
            (Raw::Bare(s), _) => return Err(format!("expected a quoted string, found '{s}'")),
        };
        let int = || text.parse::<u64>().map_err(|_| format!("expected an integer, found '{text}'"));
        let real = || text.parse::<f64>().map_err(|_| format!("expected a number, found '{text}'"));
        match key {
            "space" => self.space = Some(text.into()),
            "radius" => self.radius = Some(text.parse()?),
            "density" => self.density = Some(text.into()),
            "symbol" => self.symbol = Some(text.into()),
            "boundary" => self.boundary = Some(text.into()),
            "psi" => self.psi = Some(text.into()),
            "orders" => self.orders = Some(text.parse()?),
            "N" | "order" => self.order = Some(int()? as usize),
            "alpha" => self.alpha = Some(real()?),
            "beta" => self.beta = Some(real()?),
            "r_tilde" => self.r_tilde = Some(real()?),
            "m_list" => self.m_list = Some(text.parse()?),
            "radial_nodes" => self.radial_nodes = Some(int()? as usize),
            "radial_panels" => self.radial_panels = Some(int()? as usize),
            "angular_samples" => self.angular_samples = Some(int()? as usize),
            "tail_tol" => self.tail_tol = Some(real()?),
            "experiment" => self.experiment = Some(text.into()),
            "assembly" => self.assembly = Some(text.into()),
            "out" => self.out = Some(text.into()),
            "out_dir" => self.out_dir = Some(text.into()),
            "format" => self.format = Some(text.parse()?),
            "plot" => self.plot = Some(text.into()),
            "seed" => self.seed = Some(int()?),
            _ => unreachable!("key table and setter disagree on '{key}'"),
        }
        Ok(())
    }

    /// Field-wise `self.or(file)`: flags win over file values.
    pub fn over(self, file: Params) -> Params {
        macro_rules! pick {
            ($($f:ident),*) => { Params { $($f: self.$f.or(file.$f)),* } };
        }
        pick!(
            space, radius, density, symbol, boundary, psi, orders, order, alpha, beta, r_tilde,
            m_list, radial_nodes, radial_panels, angular_samples, tail_tol, experiment, assembly,
            out, out_dir, format, plot, seed
        )
    }

    /// Resolves a path against `out_dir` when it is relative.
    pub fn output_path(&self, p: &Path) -> PathBuf {
        match &self.out_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules() {
        let s = |t: &str| t.parse::<Schedule>().map(|s| s.0);
        assert_eq!(s("16:1024:geometric").unwrap(), vec![16, 32, 64, 128, 256, 512, 1024]);
        assert_eq!(s("1:100:geometric:10").unwrap(), vec![1, 10, 100]);
        assert_eq!(s("10:40:linear").unwrap(), vec![10, 20, 30, 40]);
        assert_eq!(s("0:6:linear:3").unwrap(), vec![0, 3, 6]);
        assert_eq!(s("10, 100,1000").unwrap(), vec![10, 100, 1000]);
        assert_eq!(s("7").unwrap(), vec![7]);
        for bad in ["0:8:geometric", "0:8:linear", "8:1:linear", "1:8:cubic", "a,b", "1:2"] {
            assert!(s(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn parses_typed_keys() {
        let p = Params::parse_str(
            "# comment\nspace = \"custom\"\nradius = \"inf\"\ndensity = \"2*exp(-r^2)\" # trailing\n\
             N = 12\nalpha = -0.5\norders = 16:64:geometric\nformat = json\n",
        )
        .unwrap();
        assert_eq!(p.space.as_deref(), Some("custom"));
        assert_eq!(p.radius, Some(RadiusArg::Infinite));
        assert_eq!(p.density.as_deref(), Some("2*exp(-r^2)"));
        assert_eq!(p.order, Some(12));
        assert_eq!(p.alpha, Some(-0.5));
        assert_eq!(p.orders, Some(Schedule(vec![16, 32, 64])));
        assert_eq!(p.format, Some(Format::Json));
    }

    #[test]
    fn errors_cite_line_and_key() {
        let e = Params::parse_str("space = \"fock\"\nbogus = 1\n").unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("'bogus'") && e.contains("unknown key"), "{e}");
        let e = Params::parse_str("N = 1\norder = 2\n").unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("duplicate"), "{e}");
        let e = Params::parse_str("\n\nN = \"ten\"\n").unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("'N'") && e.contains("integer"), "{e}");
        let e = Params::parse_str("symbol = r^2\n").unwrap_err().to_string();
        assert!(e.contains("quoted string"), "{e}");
        let e = Params::parse_str("just words\n").unwrap_err().to_string();
        assert!(e.contains("line 1"), "{e}");
        assert!(Params::parse_str("symbol = \"r\n").is_err());
    }

    #[test]
    fn empty_file_and_precedence() {
        let file = Params::parse_str("").unwrap();
        assert!(file.space.is_none() && file.order.is_none());
        let file = Params::parse_str("space = \"fock\"\nN = 3\n").unwrap();
        let flags = Params {
            space: Some("bergman".into()),
            ..Params::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.space.as_deref(), Some("bergman"));
        assert_eq!(merged.order, Some(3));
    }
}
