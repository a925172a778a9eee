//! `key = value` configuration with `[section]` headers, merged with command
//! line flags and resolved into a validated [`RunConfig`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sobolev_lab::conformal::{MobiusMap, Primitive};
use sobolev_lab::flows::SpeedLaw;
use sobolev_lab::geometry::{AngularWeight, StarDomain2D};
use sobolev_lab::SobolevExponents;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {message}")]
    Syntax { path: String, line: usize, message: String },
    #[error("`{key}`: {message}")]
    Key { key: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl ConfigError {
    fn key(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Key { key: key.to_string(), message: message.into() }
    }
}

pub const KNOWN_KEYS: &[&str] = &[
    "command",
    "domain.kind",
    "domain.R",
    "domain.side",
    "domain.amplitude",
    "domain.mode",
    "domain.file",
    "exponents.n",
    "exponents.p",
    "exponents.r",
    "mesh.h",
    "mesh.grid",
    "mesh.levels",
    "mesh.cells",
    "check.tolerance",
    "verify.suite",
    "derivative.delta",
    "speed.offset",
    "speed.amplitude",
    "speed.mode",
    "speed.phase",
    "speed.value",
    "flow.law",
    "flow.dt",
    "flow.steps",
    "flow.pole",
    "conformal.map",
    "conformal.points",
    "output.json",
    "output.csv",
    "output.field",
    "output.mesh",
    "output.profile",
];

/// Flat `section.key → value` map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str, path: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError::Syntax { path: path.to_string(), line: i + 1, message };
            if let Some(rest) = line.strip_prefix('[') {
                let name =
                    rest.strip_suffix(']').ok_or_else(|| err(format!("unterminated section header `{line}`")))?;
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            let key = if section.is_empty() { k.trim().to_string() } else { format!("{section}.{}", k.trim()) };
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(err(format!("unknown key `{key}`")));
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(err(format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { values })
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Values in `other` replace ours.
    pub fn overridden_by(mut self, other: &RawConfig) -> Self {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        debug_assert!(KNOWN_KEYS.contains(&key), "{key}");
        self.values.insert(key.to_string(), value.into());
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::key(key, format!("cannot parse `{v}`"))),
        }
    }

    fn parse_opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.get(key).map(|v| v.parse().map_err(|_| ConfigError::key(key, format!("cannot parse `{v}`")))).transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Rearrange,
    Verify,
    Derivative,
    Flow,
    Conformal,
}

impl std::str::FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "solve" => Command::Solve,
            "rearrange" => Command::Rearrange,
            "verify" => Command::Verify,
            "derivative" => Command::Derivative,
            "flow" => Command::Flow,
            "conformal" => Command::Conformal,
            _ => return Err(format!("unknown command `{s}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Disk {
        radius: f64,
    },
    Square {
        side: f64,
    },
    /// `ρ = R(1 + a cos kθ)`.
    Perturbed {
        radius: f64,
        amplitude: f64,
        mode: u32,
    },
    /// Radial ball in dimension `n`, solved by the radial solver.
    Ball {
        radius: f64,
    },
    /// `theta rho` samples about the origin.
    File {
        path: PathBuf,
    },
}

impl DomainSpec {
    pub fn star_domain(&self) -> sobolev_lab::Result<StarDomain2D> {
        match self {
            DomainSpec::Disk { radius } => StarDomain2D::disk(*radius),
            DomainSpec::Square { side } => StarDomain2D::square(*side),
            DomainSpec::Perturbed { radius, amplitude, mode } => {
                StarDomain2D::perturbed_disk(*radius, *amplitude, *mode)
            }
            DomainSpec::Ball { .. } => {
                Err(sobolev_lab::LabError::InvalidInput("a radial ball has no planar mesh".into()))
            }
            DomainSpec::File { path } => {
                let file = std::fs::File::open(path)?;
                StarDomain2D::read_samples([0.0, 0.0], std::io::BufReader::new(file))
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            DomainSpec::Disk { .. } => "disk".into(),
            DomainSpec::Square { .. } => "square".into(),
            DomainSpec::Perturbed { .. } => "perturbed".into(),
            DomainSpec::Ball { .. } => "ball".into(),
            DomainSpec::File { path } => path.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    All,
    ReverseHolder,
    Log2d,
    PowerR,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outputs {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub field: Option<PathBuf>,
    pub mesh: Option<PathBuf>,
    pub profile: Option<PathBuf>,
}

/// Fully resolved run description; echoed into every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub domain: DomainSpec,
    pub n: u32,
    pub p: f64,
    pub r: f64,
    pub h: f64,
    pub grid: usize,
    pub levels: usize,
    pub cells: usize,
    /// Overrides the per-check default tolerance when set.
    pub tolerance: Option<f64>,
    pub suite: Suite,
    pub delta: f64,
    pub weight: AngularWeight,
    pub law: SpeedLaw,
    pub dt: f64,
    pub steps: usize,
    pub map: Vec<Primitive>,
    pub points: usize,
    pub outputs: Outputs,
}

impl RunConfig {
    pub fn exponents(&self) -> SobolevExponents {
        SobolevExponents::new(self.n, self.p, self.r).expect("validated at resolve time")
    }
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::key(key, format!("must be positive, got {v}")))
    }
}

fn parse_point(key: &str, s: &str, dim: usize) -> Result<Vec<f64>, ConfigError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| ConfigError::key(key, format!("cannot parse point `{s}`")))?;
    if v.len() != dim {
        return Err(ConfigError::key(key, format!("expected {dim} coordinates, got {}", v.len())));
    }
    Ok(v)
}

/// `translate x,y,z; rotate i j angle; scale λ; invert`.
pub fn parse_map(s: &str, n: usize) -> Result<Vec<Primitive>, ConfigError> {
    let key = "conformal.map";
    let mut chain = Vec::new();
    for item in s.split(';').map(str::trim).filter(|x| !x.is_empty()) {
        let (head, rest) = item.split_once(char::is_whitespace).unwrap_or((item, ""));
        let rest = rest.trim();
        let num =
            |x: &str| x.parse::<f64>().map_err(|_| ConfigError::key(key, format!("cannot parse `{x}` in `{item}`")));
        chain.push(match head {
            "translate" => Primitive::Translate { by: parse_point(key, rest, n)? },
            "scale" => Primitive::Scale { factor: positive(key, num(rest)?)? },
            "invert" if rest.is_empty() => Primitive::Invert,
            "rotate" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [i, j, a] = parts[..] else {
                    return Err(ConfigError::key(key, format!("`rotate i j angle`, found `{item}`")));
                };
                let axis = |x: &str| {
                    x.parse::<usize>()
                        .ok()
                        .filter(|&k| k < n)
                        .ok_or_else(|| ConfigError::key(key, format!("axis `{x}` out of range in `{item}`")))
                };
                let (i, j) = (axis(i)?, axis(j)?);
                if i == j {
                    return Err(ConfigError::key(key, format!("rotation axes coincide in `{item}`")));
                }
                Primitive::givens(n, i, j, num(a)?)
            }
            _ => return Err(ConfigError::key(key, format!("unknown primitive `{item}`"))),
        });
    }
    MobiusMap::new(n, chain.clone()).map_err(|e| ConfigError::key(key, e.to_string()))?;
    Ok(chain)
}

pub fn resolve(raw: &RawConfig) -> Result<RunConfig, ConfigError> {
    let command: Command = raw
        .get("command")
        .ok_or_else(|| ConfigError::key("command", "no command given"))?
        .parse()
        .map_err(|e: String| ConfigError::key("command", e))?;

    let n: u32 = raw.parse_or("exponents.n", if command == Command::Conformal { 3 } else { 2 })?;
    let p: f64 = raw.parse_or("exponents.p", 2.0)?;
    let r_default = if command == Command::Conformal { p } else { 2.0 };
    let r: f64 = raw.parse_or("exponents.r", r_default)?;
    if n < 2 {
        return Err(ConfigError::key("exponents.n", format!("must be at least 2, got {n}")));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(ConfigError::key("exponents.p", format!("must be at least 1, got {p}")));
    }
    if !(r > 1.0 && r <= n as f64) {
        return Err(ConfigError::key("exponents.r", format!("must lie in (1, n], got {r}")));
    }
    // remaining constraint is the critical exponent bound on p
    SobolevExponents::new(n, p, r).map_err(|e| ConfigError::key("exponents.p", e.to_string()))?;

    let radius = positive("domain.R", raw.parse_or("domain.R", 1.0)?)?;
    let kind = raw.get("domain.kind").unwrap_or(if n == 2 { "disk" } else { "ball" });
    let domain = match kind {
        "disk" => DomainSpec::Disk { radius },
        "square" => DomainSpec::Square { side: positive("domain.side", raw.parse_or("domain.side", 2.0)?)? },
        "perturbed" => {
            let amplitude: f64 = raw.parse_or("domain.amplitude", 0.2)?;
            if !(0.0..1.0).contains(&amplitude) {
                return Err(ConfigError::key("domain.amplitude", format!("must lie in [0, 1), got {amplitude}")));
            }
            DomainSpec::Perturbed { radius, amplitude, mode: raw.parse_or("domain.mode", 3)? }
        }
        "ball" => DomainSpec::Ball { radius },
        "file" => {
            let path = PathBuf::from(
                raw.get("domain.file").ok_or_else(|| ConfigError::key("domain.file", "required for kind = file"))?,
            );
            if !path.is_file() {
                return Err(ConfigError::key("domain.file", format!("{} does not exist", path.display())));
            }
            DomainSpec::File { path }
        }
        other => return Err(ConfigError::key("domain.kind", format!("unknown domain `{other}`"))),
    };
    let planar = command != Command::Conformal && !matches!(domain, DomainSpec::Ball { .. });
    if planar && n != 2 {
        return Err(ConfigError::key("exponents.n", format!("planar domains need n = 2, got {n}")));
    }
    if command != Command::Solve && command != Command::Conformal && !planar {
        return Err(ConfigError::key("domain.kind", "this command needs a planar domain"));
    }

    let h = positive("mesh.h", raw.parse_or("mesh.h", 0.02)?)?;
    let grid: usize = raw.parse_or("mesh.grid", sobolev_lab::radial::DEFAULT_GRID)?;
    let levels: usize = raw.parse_or("mesh.levels", sobolev_lab::rearrangement::DEFAULT_LEVELS)?;
    let cells: usize = raw.parse_or("mesh.cells", sobolev_lab::rearrangement::DEFAULT_VOLUME_CELLS)?;
    for (key, v, min) in [("mesh.grid", grid, 10), ("mesh.levels", levels, 10), ("mesh.cells", cells, 4)] {
        if v < min {
            return Err(ConfigError::key(key, format!("must be at least {min}, got {v}")));
        }
    }
    let tolerance = raw.parse_opt::<f64>("check.tolerance")?.map(|t| positive("check.tolerance", t)).transpose()?;

    let suite = match raw.get("verify.suite").unwrap_or("all") {
        "all" => Suite::All,
        "reverse_holder" => Suite::ReverseHolder,
        "log2d" => Suite::Log2d,
        "power_r" => Suite::PowerR,
        other => return Err(ConfigError::key("verify.suite", format!("unknown suite `{other}`"))),
    };

    let delta = positive("derivative.delta", raw.parse_or("derivative.delta", 1e-3)?)?;
    let weight = AngularWeight {
        offset: raw.parse_or("speed.offset", 0.0)?,
        amplitude: raw.parse_or("speed.amplitude", 0.0)?,
        mode: raw.parse_or("speed.mode", 0)?,
        phase: raw.parse_or("speed.phase", 0.0)?,
    };
    let law = match raw.get("flow.law").unwrap_or("uniform") {
        "uniform" => SpeedLaw::Uniform { speed: positive("speed.value", raw.parse_or("speed.value", 1.0)?)? },
        "weighted" => SpeedLaw::Weighted { weight },
        "hele_shaw" => {
            let pole = parse_point("flow.pole", raw.get("flow.pole").unwrap_or("0,0"), 2)?;
            SpeedLaw::HeleShaw { pole: [pole[0], pole[1]] }
        }
        other => return Err(ConfigError::key("flow.law", format!("unknown law `{other}`"))),
    };
    let dt = positive("flow.dt", raw.parse_or("flow.dt", 0.01)?)?;
    let steps: usize = raw.parse_or("flow.steps", 10)?;
    if steps == 0 {
        return Err(ConfigError::key("flow.steps", "must be at least 1"));
    }

    let map = match raw.get("conformal.map") {
        Some(s) if command == Command::Conformal => parse_map(s, n as usize)?,
        _ => Vec::new(),
    };
    if command == Command::Conformal {
        if n < 3 {
            return Err(ConfigError::key("exponents.n", format!("conformal runs need n ≥ 3, got {n}")));
        }
        if p != r || p <= 1.0 {
            return Err(ConfigError::key(
                "exponents.r",
                format!("conformal runs need p = r > 1, got p = {p}, r = {r}"),
            ));
        }
    }
    let points: usize = raw.parse_or("conformal.points", 20)?;
    if points < 3 {
        return Err(ConfigError::key("conformal.points", format!("must be at least 3, got {points}")));
    }

    let path = |key: &str| raw.get(key).map(PathBuf::from);
    let outputs = Outputs {
        json: path("output.json"),
        csv: path("output.csv"),
        field: path("output.field"),
        mesh: path("output.mesh"),
        profile: path("output.profile"),
    };

    Ok(RunConfig {
        command,
        domain,
        n,
        p,
        r,
        h,
        grid,
        levels,
        cells,
        tolerance,
        suite,
        delta,
        weight,
        law,
        dt,
        steps,
        map,
        points,
        outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let raw =
            RawConfig::parse("command = solve\n# note\n[mesh]\nh = 0.05 # coarse\n[exponents]\np=1.5\nr = 1.5\n", "t")
                .unwrap();
        let cfg = resolve(&raw).unwrap();
        assert_eq!(cfg.h, 0.05);
        assert_eq!((cfg.p, cfg.r), (1.5, 1.5));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let e = RawConfig::parse("command = solve\n[mesh\n", "cfg").unwrap_err();
        assert!(e.to_string().starts_with("cfg:2:"), "{e}");
        let e = RawConfig::parse("[mesh]\nsize = 1\n", "cfg").unwrap_err();
        assert!(e.to_string().contains("mesh.size"), "{e}");
    }

    #[test]
    fn map_parsing() {
        let chain = parse_map("translate 2,0,0; invert; scale 4; rotate 0 1 0.5", 3).unwrap();
        assert_eq!(chain.len(), 4);
        assert!(parse_map("translate 1,0", 3).is_err());
        assert!(parse_map("rotate 0 0 1", 3).is_err());
        assert!(parse_map("shear 1", 3).is_err());
    }
}
