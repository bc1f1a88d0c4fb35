//! Run configuration: TOML file, flag overrides and per-experiment defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bogolab::lab::CandidateSet;
use bogolab::StarDomain;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Solve,
    BaScan,
    Counterexample,
    Relations,
    NlSymmetric,
    Fourier,
    Identities,
    Infsup,
    Poincare,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Solve,
        Experiment::BaScan,
        Experiment::Counterexample,
        Experiment::Relations,
        Experiment::NlSymmetric,
        Experiment::Fourier,
        Experiment::Identities,
        Experiment::Infsup,
        Experiment::Poincare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Solve => "solve",
            Experiment::BaScan => "ba-scan",
            Experiment::Counterexample => "counterexample",
            Experiment::Relations => "relations",
            Experiment::NlSymmetric => "nl-symmetric",
            Experiment::Fourier => "fourier",
            Experiment::Identities => "identities",
            Experiment::Infsup => "infsup",
            Experiment::Poincare => "poincare",
        }
    }

    fn needs_domain(self) -> bool {
        !matches!(self, Experiment::Fourier | Experiment::Identities)
    }

    /// Experiments that work on a finite-difference grid.
    fn uses_grid(self) -> bool {
        matches!(self, Experiment::Relations | Experiment::NlSymmetric | Experiment::Infsup | Experiment::Poincare)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
            ConfigError::Invalid(format!("unknown experiment '{s}' (expected one of {})", names.join(", ")))
        })
    }
}

/// A number or a list of numbers; lists describe domain families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    /// `rectangle`, `square`, `box` or `ball`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

impl DomainSpec {
    pub fn rectangle(a: f64, eps: f64) -> Self {
        Self {
            kind: "rectangle".into(),
            a: Some(OneOrMany::One(a)),
            eps: Some(OneOrMany::One(eps)),
            b: None,
            c: None,
            r: None,
            dim: None,
        }
    }

    /// Every domain described; list-valued keys expand to a family.
    pub fn build(&self) -> Result<Vec<StarDomain>, ConfigError> {
        let need = |v: &Option<OneOrMany>, key: &'static str| v.as_ref().map(OneOrMany::values).ok_or(ConfigError::Missing(key));
        let wrap = |e: bogolab::Error| ConfigError::Invalid(format!("domain: {e}"));
        match self.kind.as_str() {
            "square" => Ok(vec![StarDomain::unit_square()]),
            "rectangle" => {
                let a = need(&self.a, "domain.a")?;
                let eps = need(&self.eps, "domain.eps")?;
                let mut out = Vec::new();
                for &a in &a {
                    for &e in &eps {
                        out.push(StarDomain::rectangle(a, e).map_err(wrap)?);
                    }
                }
                Ok(out)
            }
            "box" => {
                let a = need(&self.a, "domain.a")?;
                let b = self.b.ok_or(ConfigError::Missing("domain.b"))?;
                let c = self.c.ok_or(ConfigError::Missing("domain.c"))?;
                a.iter().map(|&a| StarDomain::cuboid(a, b, c).map_err(wrap)).collect()
            }
            "ball" => {
                let r = need(&self.r, "domain.r")?;
                let dim = self.dim.unwrap_or(2);
                r.iter().map(|&r| StarDomain::ball(r, dim).map_err(wrap)).collect()
            }
            other => Err(ConfigError::Invalid(format!(
                "domain.kind '{other}' is not one of rectangle, square, box, ball"
            ))),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    resolution: Option<usize>,
    grid: Option<Vec<usize>>,
    candidates: Option<String>,
    order: Option<u8>,
    samples: Option<usize>,
    directions: Option<usize>,
    radii: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    experiment: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    domain: Option<DomainSpec>,
    run: Option<RunSection>,
    tolerances: Option<BTreeMap<String, f64>>,
}

/// Values given on the command line; each one replaces the file value.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub resolution: Option<usize>,
    pub a: Option<f64>,
    pub eps: Option<f64>,
    pub threads: Option<usize>,
}

/// Everything that determines the numbers in a report. Output location and
/// worker count are kept apart because they do not change the results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub experiment: Experiment,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    pub resolution: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub radii: Vec<f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub config: ResolvedConfig,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_RESOLUTION: usize = 24;

fn parse_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
    parse_str(&text, &path.display().to_string())
}

fn parse_str(text: &str, origin: &str) -> Result<FileConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let message = match e.span() {
            Some(span) => {
                let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                format!("line {line}: {}", e.message())
            }
            None => e.message().to_string(),
        };
        ConfigError::Parse { path: origin.to_string(), message }
    })
}

pub fn resolve(config: Option<&Path>, flags: &Overrides) -> Result<Plan, ConfigError> {
    let file = match config {
        Some(p) => parse_file(p)?,
        None => FileConfig::default(),
    };
    resolve_parts(file, flags)
}

#[cfg(test)]
pub fn resolve_text(text: &str, flags: &Overrides) -> Result<Plan, ConfigError> {
    resolve_parts(parse_str(text, "<config>")?, flags)
}

fn resolve_parts(file: FileConfig, flags: &Overrides) -> Result<Plan, ConfigError> {
    let experiment: Experiment = flags
        .experiment
        .clone()
        .or(file.experiment)
        .ok_or(ConfigError::Missing("experiment"))?
        .parse()?;
    let run = file.run.unwrap_or_default();

    let mut domain = file.domain;
    if flags.a.is_some() || flags.eps.is_some() {
        let mut d = domain.unwrap_or_else(|| DomainSpec::rectangle(1.0, 0.125));
        if d.kind != "rectangle" {
            return Err(ConfigError::Invalid(format!("--a and --eps apply to rectangles, domain.kind is '{}'", d.kind)));
        }
        if let Some(a) = flags.a {
            d.a = Some(OneOrMany::One(a));
        }
        if let Some(e) = flags.eps {
            d.eps = Some(OneOrMany::One(e));
        }
        domain = Some(d);
    }
    if experiment.needs_domain() {
        let d = domain.as_ref().ok_or(ConfigError::Missing("domain"))?;
        let built = d.build()?;
        if experiment != Experiment::BaScan && built.len() != 1 {
            return Err(ConfigError::Invalid(format!("{experiment} needs a single domain, got a family of {}", built.len())));
        }
        if experiment == Experiment::Counterexample && d.kind != "rectangle" {
            return Err(ConfigError::Invalid("counterexample needs domain.kind = \"rectangle\"".into()));
        }
    } else {
        domain = None;
    }

    let mut grid = run.grid.unwrap_or_default();
    let mut resolution = run.resolution.unwrap_or(DEFAULT_RESOLUTION);
    if let Some(r) = flags.resolution {
        if matches!(experiment, Experiment::Infsup | Experiment::Poincare) {
            grid = vec![r];
        } else {
            resolution = r;
        }
    }
    if experiment.uses_grid() && grid.is_empty() {
        grid = match experiment {
            Experiment::NlSymmetric => vec![32, 64],
            Experiment::Infsup => vec![16, 32, 64],
            _ => vec![64],
        };
    }
    if !experiment.uses_grid() && experiment != Experiment::Solve {
        grid.clear();
    }
    if experiment == Experiment::Solve && grid.is_empty() {
        grid = vec![32];
    }
    if resolution < 2 {
        return Err(ConfigError::Invalid(format!("run.resolution must be at least 2, got {resolution}")));
    }
    if let Some(g) = grid.iter().find(|&&g| g < 4) {
        return Err(ConfigError::Invalid(format!("run.grid entries must be at least 4, got {g}")));
    }

    let order = match experiment {
        Experiment::BaScan => {
            let o = run.order.unwrap_or(0);
            if o > 1 {
                return Err(ConfigError::Invalid(format!("run.order must be 0 or 1, got {o}")));
            }
            Some(o)
        }
        _ => None,
    };
    let candidates = match experiment {
        Experiment::BaScan => {
            let default = if order == Some(1) { "bubble" } else { "plain" };
            let name = run.candidates.unwrap_or_else(|| default.into());
            CandidateSet::from_str(&name).map_err(|e| ConfigError::Invalid(format!("run.candidates: {e}")))?;
            Some(name)
        }
        _ => None,
    };
    let samples = match experiment {
        Experiment::Relations | Experiment::NlSymmetric => {
            let s = run.samples.unwrap_or(20);
            if experiment == Experiment::NlSymmetric && s < 20 {
                return Err(ConfigError::Invalid(format!("run.samples must be at least 20, got {s}")));
            }
            Some(s)
        }
        _ => None,
    };
    let (directions, radii) = match experiment {
        Experiment::Fourier => {
            let radii = run.radii.unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
            if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
                return Err(ConfigError::Invalid("run.radii must be a nonempty list of positive radii".into()));
            }
            (Some(run.directions.unwrap_or(32).max(1)), radii)
        }
        _ => (None, Vec::new()),
    };

    Ok(Plan {
        config: ResolvedConfig {
            experiment,
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            domain,
            resolution,
            grid,
            candidates,
            order,
            samples,
            directions,
            radii,
            tolerances: file.tolerances.unwrap_or_default(),
        },
        out: flags.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
        threads: flags.threads.or(file.threads),
    })
}

impl ResolvedConfig {
    pub fn domains(&self) -> Vec<StarDomain> {
        self.domain.as_ref().map(|d| d.build().expect("validated during resolution")).unwrap_or_default()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
