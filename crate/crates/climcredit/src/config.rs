//! JSON run configuration.

use std::path::{Path, PathBuf};

use climcredit_core::credit::{Direction, RiskConfig};
use climcredit_core::transition::CarbonPriceSchedule;
use serde::{Deserialize, Serialize};

/// Input file locations. Relative paths are resolved against the directory of
/// the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFiles {
    pub sector_panel: PathBuf,
    pub flows: PathBuf,
    pub emissions: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermediary_emissions: Option<PathBuf>,
    pub default_history: PathBuf,
    pub portfolio: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cash_flows: Option<PathBuf>,
}

impl DataFiles {
    pub fn resolved(&self, base: &Path) -> Self {
        let r = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        Self {
            sector_panel: r(&self.sector_panel),
            flows: r(&self.flows),
            emissions: r(&self.emissions),
            intermediary_emissions: self.intermediary_emissions.as_ref().map(r),
            default_history: r(&self.default_history),
            portfolio: r(&self.portfolio),
            cash_flows: self.cash_flows.as_ref().map(r),
        }
    }

    /// Every referenced file in a fixed order.
    pub fn all(&self) -> Vec<(&'static str, &Path)> {
        let mut v: Vec<(&'static str, &Path)> = vec![
            ("sector_panel", &self.sector_panel),
            ("flows", &self.flows),
            ("emissions", &self.emissions),
        ];
        if let Some(p) = &self.intermediary_emissions {
            v.push(("intermediary_emissions", p));
        }
        v.push(("default_history", &self.default_history));
        v.push(("portfolio", &self.portfolio));
        if let Some(p) = &self.cash_flows {
            v.push(("cash_flows", p));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceSpec {
    /// Grows by `growth` per year from `delta0` at `t_circ`.
    Geometric { growth: f64 },
    /// `(year, price)` for every year of `[t_circ, t_star]`.
    Explicit { prices: Vec<(i32, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Price before and at the transition start, in euros per ton.
    pub delta0: f64,
    pub t_circ: i32,
    pub t_star: i32,
    pub path: PriceSpec,
}

impl ScenarioConfig {
    pub fn schedule(&self) -> climcredit_core::Result<CarbonPriceSchedule> {
        match &self.path {
            PriceSpec::Geometric { growth } => CarbonPriceSchedule::geometric(self.delta0, self.t_circ, self.t_star, *growth),
            PriceSpec::Explicit { prices } => CarbonPriceSchedule::explicit(self.delta0, self.t_circ, self.t_star, prices),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSpec {
    AllOnes,
    UnitAt(usize),
    FromDate(usize),
    Proportional,
    Custom(Vec<f64>),
}

impl From<&DirectionSpec> for Direction {
    fn from(d: &DirectionSpec) -> Self {
        match d {
            DirectionSpec::AllOnes => Direction::AllOnes,
            DirectionSpec::UnitAt(t) => Direction::UnitAt(*t),
            DirectionSpec::FromDate(t) => Direction::FromDate(*t),
            DirectionSpec::Proportional => Direction::Proportional,
            DirectionSpec::Custom(v) => Direction::Custom(v.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskSettings {
    pub paths: usize,
    pub alpha: f64,
    /// Default horizon `T` in years.
    pub horizon: usize,
    pub seed: u64,
    /// Finite-difference step `ϑ` for sensitivities.
    pub theta_fd: f64,
    pub direction: DirectionSpec,
}

impl Default for RiskSettings {
    fn default() -> Self {
        let d = RiskConfig::default();
        Self {
            paths: d.paths,
            alpha: d.alpha,
            horizon: d.horizon,
            seed: d.seed,
            theta_fd: d.theta_fd,
            direction: DirectionSpec::AllOnes,
        }
    }
}

impl RiskSettings {
    pub fn to_core(&self) -> RiskConfig {
        RiskConfig {
            paths: self.paths,
            alpha: self.alpha,
            horizon: self.horizon,
            seed: self.seed,
            theta_fd: self.theta_fd,
            direction: (&self.direction).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MleSettings {
    pub paths: usize,
    pub seed: u64,
}

impl Default for MleSettings {
    fn default() -> Self {
        Self { paths: 2000, seed: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
    Plot,
}

impl ReportFormat {
    pub fn all() -> Vec<ReportFormat> {
        vec![ReportFormat::Csv, ReportFormat::Json, ReportFormat::Plot]
    }
}

fn default_formats() -> Vec<ReportFormat> {
    ReportFormat::all()
}

fn default_rate() -> f64 {
    0.05
}

fn default_true() -> bool {
    true
}

fn default_years() -> usize {
    10
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataFiles,
    #[serde(default)]
    pub scenarios: Vec<ScenarioConfig>,
    /// Calendar year of model time `t = 0`; defaults to the earliest
    /// scenario start.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_ref: Option<i32>,
    #[serde(default = "default_rate")]
    pub discount_rate: f64,
    /// Rescale λ to constant returns to scale.
    #[serde(default = "default_true")]
    pub renormalize: bool,
    #[serde(default)]
    pub one_risk_class: bool,
    /// Reports cover model years `0..=report_years`.
    #[serde(default = "default_years")]
    pub report_years: usize,
    #[serde(default)]
    pub risk: RiskSettings,
    #[serde(default)]
    pub mle: MleSettings,
    /// Worker threads; `None` uses all cores. Results do not depend on it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<ReportFormat>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}", .0.join("; "))]
    Invalid(Vec<String>),
}

impl RunConfig {
    /// Loads a config and resolves data paths and `out` against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.data = cfg.data.resolved(base);
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        Ok(cfg)
    }

    pub fn t_ref(&self) -> Option<i32> {
        self.t_ref.or_else(|| self.scenarios.iter().map(|s| s.t_circ).min())
    }

    /// Checks every invariant that does not need the data, listing all failures.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        for (name, p) in self.data.all() {
            if !p.is_file() {
                errs.push(format!("{name} file {} does not exist", p.display()));
            }
        }
        if let Err(e) = self.risk.to_core().validate() {
            errs.push(format!("risk settings: {e}"));
        }
        if !(self.discount_rate > 0.0 && self.discount_rate.is_finite()) {
            errs.push(format!("discount_rate {} must be positive", self.discount_rate));
        }
        if self.mle.paths == 0 {
            errs.push("mle.paths must be positive".into());
        }
        if self.workers == Some(0) {
            errs.push("workers must be positive".into());
        }
        let t_ref = self.t_ref();
        for (k, s) in self.scenarios.iter().enumerate() {
            if self.scenarios[..k].iter().any(|o| o.name == s.name) {
                errs.push(format!("duplicate scenario name '{}'", s.name));
            }
            if let Err(e) = s.schedule() {
                errs.push(format!("scenario '{}': {e}", s.name));
            }
            if let Some(t) = t_ref {
                if t > s.t_circ {
                    errs.push(format!("scenario '{}': t_ref {t} is after its start {}", s.name, s.t_circ));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }
}
