//! Run configuration: per-experiment defaults, a flat TOML file, then
//! command-line flags, each layer overriding the previous one.
//!
//! ```toml
//! n = 100
//! u = 1.0
//! w = 0.95
//! bc = "open"
//! gamma_grid = "0:1.5:30"     # start:stop:count, or a list [0.0, 0.1]
//! realizations = 15000
//! seed = 7
//! out = "mean_nu.csv"
//! format = "csv"
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sshlab_core::model::{BoundaryCondition, ChainParams};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Invariant,
    MeanNuCurve,
    PhaseDiagram,
    EdgeModes,
    GapScan,
    Born,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Invariant => "invariant",
            Self::MeanNuCurve => "mean-nu",
            Self::PhaseDiagram => "phase-diagram",
            Self::EdgeModes => "edge-modes",
            Self::GapScan => "gap-scan",
            Self::Born => "born",
        }
    }

    fn uses_w_grid(self) -> bool {
        matches!(self, Self::PhaseDiagram | Self::Born)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

/// A grid given either as an explicit list or as text: `start:stop:count`
/// (inclusive, evenly spaced) or comma-separated values.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Text(String),
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            Self::List(v) => Ok(v.clone()),
            Self::Text(s) => parse_grid(s),
        }
    }
}

impl FromStr for GridSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        parse_grid(s)?;
        Ok(Self::Text(s.to_string()))
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("not a number: {s:?}")))
}

pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| {
                if i == count - 1 {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => s.split(',').map(parse_f64).collect(),
        3 => {
            let count: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad point count in grid {s:?}")))?;
            Ok(linspace(parse_f64(parts[0])?, parse_f64(parts[1])?, count))
        }
        _ => Err(CliError::Config(format!(
            "grid {s:?} is neither start:stop:count nor a comma list"
        ))),
    }
}

/// Every field optional; used for the config file and for command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub experiment: Option<Experiment>,
    pub n: Option<usize>,
    pub u: Option<f64>,
    pub w: Option<f64>,
    pub bc: Option<BoundaryCondition>,
    pub gamma_grid: Option<GridSpec>,
    pub w_grid: Option<GridSpec>,
    pub realizations: Option<usize>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub out: Option<String>,
    pub format: Option<OutputFormat>,
}

/// A fully resolved run. Its JSON form is embedded in every output header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub params: ChainParams,
    pub gamma_grid: Vec<f64>,
    /// Only used by `phase-diagram` and `born`.
    pub w_grid: Vec<f64>,
    pub realizations: usize,
    pub master_seed: u64,
    /// Retarded regulator of the Born functions.
    pub alpha: f64,
    pub output_path: String,
    pub output_format: OutputFormat,
}

pub const DEFAULT_SEED: u64 = 1;

struct Defaults {
    n: usize,
    w: f64,
    bc: BoundaryCondition,
    gamma_grid: Vec<f64>,
    w_grid: Vec<f64>,
    realizations: usize,
}

fn defaults(experiment: Experiment) -> Defaults {
    use BoundaryCondition::*;
    match experiment {
        Experiment::Invariant => Defaults {
            n: 40,
            w: 0.9,
            bc: Periodic,
            gamma_grid: linspace(0.0, 1.0, 5),
            w_grid: Vec::new(),
            realizations: 20,
        },
        Experiment::MeanNuCurve => Defaults {
            n: 100,
            w: 0.95,
            bc: Open,
            gamma_grid: linspace(0.0, 1.5, 30),
            w_grid: Vec::new(),
            realizations: 15_000,
        },
        Experiment::PhaseDiagram => Defaults {
            n: 300,
            w: 0.8,
            bc: Periodic,
            gamma_grid: linspace(0.0, 1.5, 31),
            w_grid: linspace(0.5, 1.1, 25),
            realizations: 1,
        },
        Experiment::EdgeModes => Defaults {
            n: 100,
            w: 0.95,
            bc: Open,
            gamma_grid: linspace(0.0, 2.0, 21),
            w_grid: Vec::new(),
            realizations: 100,
        },
        Experiment::GapScan => Defaults {
            n: 300,
            w: 0.8,
            bc: Periodic,
            gamma_grid: linspace(0.0, 0.8, 41),
            w_grid: Vec::new(),
            realizations: 100,
        },
        Experiment::Born => Defaults {
            n: 2,
            w: 0.95,
            bc: Periodic,
            gamma_grid: linspace(0.0, 0.5, 26),
            w_grid: vec![0.9, 0.95, 0.99],
            realizations: 1,
        },
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(CliError::Config(format!("{name} must not be empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Config(format!("{name} contains a non-finite value")));
    }
    if grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(CliError::Config(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

impl RunConfig {
    /// Defaults for `experiment`, then `file`, then `flags`.
    pub fn resolve(
        experiment: Experiment,
        file: Option<&ConfigOverrides>,
        flags: &ConfigOverrides,
    ) -> Result<Self> {
        for layer in file.iter().copied().chain([flags]) {
            if let Some(e) = layer.experiment {
                if e != experiment {
                    return Err(CliError::Config(format!(
                        "configuration is for `{e}` but `{experiment}` was requested"
                    )));
                }
            }
        }
        let d = defaults(experiment);
        let pick = |get: &dyn Fn(&ConfigOverrides) -> Option<f64>| get(flags).or_else(|| file.and_then(get));

        let n = layered(file, flags, |o| o.n).unwrap_or(d.n);
        let u = pick(&|o| o.u).unwrap_or(1.0);
        let w = pick(&|o| o.w).unwrap_or(d.w);
        let bc = layered(file, flags, |o| o.bc).unwrap_or(d.bc);
        let gamma_grid = match layered(file, flags, |o| o.gamma_grid.clone()) {
            Some(spec) => spec.values()?,
            None => d.gamma_grid,
        };
        let w_grid = match layered(file, flags, |o| o.w_grid.clone()) {
            Some(spec) => spec.values()?,
            None => d.w_grid,
        };
        let realizations = layered(file, flags, |o| o.realizations).unwrap_or(d.realizations);
        let master_seed = layered(file, flags, |o| o.seed).unwrap_or(DEFAULT_SEED);
        let alpha = pick(&|o| o.alpha).unwrap_or(sshlab_core::born::DEFAULT_ALPHA_OVER_U * u.abs());
        let output_format = layered(file, flags, |o| o.format).unwrap_or(OutputFormat::Csv);
        let output_path = layered(file, flags, |o| o.out.clone())
            .unwrap_or_else(|| format!("sshlab-{}.{}", experiment.name(), output_format.extension()));

        let cfg = Self {
            experiment,
            params: ChainParams { n, u, w, bc },
            gamma_grid,
            w_grid: if experiment.uses_w_grid() {
                w_grid
            } else {
                Vec::new()
            },
            realizations,
            master_seed,
            alpha,
            output_path,
            output_format,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.params.u == 0.0 {
            return Err(CliError::Config("u must be nonzero".into()));
        }
        check_grid("gamma_grid", &self.gamma_grid)?;
        if self.gamma_grid[0] < 0.0 {
            return Err(CliError::Config("disorder strengths must be >= 0".into()));
        }
        if self.experiment.uses_w_grid() {
            check_grid("w_grid", &self.w_grid)?;
        }
        let min_r = match self.experiment {
            Experiment::MeanNuCurve | Experiment::EdgeModes | Experiment::GapScan => 2,
            _ => 1,
        };
        if self.realizations < min_r {
            return Err(CliError::Config(format!(
                "{} needs at least {min_r} realizations",
                self.experiment
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(CliError::Config("alpha must be > 0".into()));
        }
        Ok(())
    }

    /// The same run expressed as overrides, so flags can still be layered on top.
    pub fn to_overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            experiment: Some(self.experiment),
            n: Some(self.params.n),
            u: Some(self.params.u),
            w: Some(self.params.w),
            bc: Some(self.params.bc),
            gamma_grid: Some(GridSpec::List(self.gamma_grid.clone())),
            w_grid: Some(GridSpec::List(self.w_grid.clone())),
            realizations: Some(self.realizations),
            seed: Some(self.master_seed),
            alpha: Some(self.alpha),
            out: Some(self.output_path.clone()),
            format: Some(self.output_format),
        }
    }
}

fn layered<T>(
    file: Option<&ConfigOverrides>,
    flags: &ConfigOverrides,
    get: impl Fn(&ConfigOverrides) -> Option<T>,
) -> Option<T> {
    get(flags).or_else(|| file.and_then(&get))
}

/// Prefix of the header line carrying the embedded run configuration.
pub const CONFIG_HEADER: &str = "# config: ";

/// Reads a TOML config file, or the configuration embedded in a previous
/// CSV or JSON result file.
pub fn load_config_file(path: &Path) -> Result<ConfigOverrides> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    if text.starts_with('#') {
        let line = text
            .lines()
            .find_map(|l| l.strip_prefix(CONFIG_HEADER))
            .ok_or_else(|| CliError::Config(format!("{} has no embedded config", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(line)?;
        return Ok(cfg.to_overrides());
    }
    if text.trim_start().starts_with('{') {
        #[derive(Deserialize)]
        struct Embedded {
            config: RunConfig,
        }
        let doc: Embedded = serde_json::from_str(&text)?;
        return Ok(doc.config.to_overrides());
    }
    Ok(toml::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert_eq!(parse_grid("0.7").unwrap(), vec![0.7]);
        assert_eq!(linspace(0.0, 1.5, 30)[29], 1.5);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn layering() {
        let file: ConfigOverrides = toml::from_str(
            r#"
            n = 50
            w = 0.9
            gamma_grid = [0.0, 0.5]
            seed = 9
            "#,
        )
        .unwrap();
        let flags = ConfigOverrides {
            seed: Some(11),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(Experiment::MeanNuCurve, Some(&file), &flags).unwrap();
        assert_eq!(cfg.params.n, 50);
        assert_eq!(cfg.params.w, 0.9);
        assert_eq!(cfg.gamma_grid, vec![0.0, 0.5]);
        assert_eq!(cfg.master_seed, 11);
        assert_eq!(cfg.realizations, 15_000);
        assert_eq!(cfg.output_path, "sshlab-mean-nu.csv");
    }

    #[test]
    fn schema_is_enforced() {
        assert!(toml::from_str::<ConfigOverrides>("nn = 3").is_err());
        assert!(toml::from_str::<ConfigOverrides>("n = \"three\"").is_err());
        let bad = ConfigOverrides {
            gamma_grid: Some(GridSpec::List(vec![0.5, 0.2])),
            ..Default::default()
        };
        assert!(RunConfig::resolve(Experiment::GapScan, None, &bad).is_err());
        let wrong = ConfigOverrides {
            experiment: Some(Experiment::Born),
            ..Default::default()
        };
        assert!(RunConfig::resolve(Experiment::GapScan, Some(&wrong), &ConfigOverrides::default()).is_err());
        let none = ConfigOverrides {
            realizations: Some(0),
            ..Default::default()
        };
        assert!(RunConfig::resolve(Experiment::Invariant, None, &none).is_err());
    }

    #[test]
    fn overrides_round_trip() {
        let cfg = RunConfig::resolve(Experiment::PhaseDiagram, None, &ConfigOverrides::default()).unwrap();
        let again = RunConfig::resolve(
            Experiment::PhaseDiagram,
            Some(&cfg.to_overrides()),
            &ConfigOverrides::default(),
        )
        .unwrap();
        assert_eq!(cfg, again);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), cfg);
    }
}
