//! Run configuration: one tree holding every tunable, with the reference
//! parameter values as defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::HeuristicRules;
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::eval::oracle::{MAX_HORIZON, MAX_LEVELS};
use crate::maddpg::TrainConfig;
use crate::timeseries::{load_csv, synth_series_with, Case, CaseRanges, ColumnMap, PriceTemperatureSeries, SynthProfile};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Daily-sinusoid series generated per case.
    Synth { seed: u64 },
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub source: DataSource,
    pub columns: ColumnMap,
    pub cases: CaseRanges,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Synth { seed: 2018 },
            columns: ColumnMap::default(),
            cases: CaseRanges::default(),
        }
    }
}

impl DatasetConfig {
    /// Series covering the configured range of `case`. Relative CSV paths
    /// resolve against `base`.
    pub fn series(&self, case: Case, base: &Path) -> Result<PriceTemperatureSeries> {
        match &self.source {
            DataSource::Synth { seed } => {
                let range = self.cases.get(case);
                synth_series_with(
                    &SynthProfile::for_case(case),
                    range.start,
                    range.hours() as usize,
                    seed.wrapping_add(case as u64),
                )
            }
            DataSource::Csv { path } => load_csv(&base.join(path), &self.columns),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Training seeds evaluated per method and case.
    pub seeds: Vec<u64>,
    /// Weight of the comfort term in the scalar objective.
    pub lambda: f64,
    /// Fan independent rollouts out over threads.
    pub parallel: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            seeds: vec![0, 1, 2],
            lambda: 0.3,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub horizon: usize,
    /// Levels, kW, shared by every action component.
    pub grid: Vec<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            horizon: 2,
            grid: vec![-1.0, 0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub environment: EnvConfig,
    pub train: TrainConfig,
    pub evaluation: EvalConfig,
    pub heuristic: HeuristicRules,
    pub oracle: OracleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            output_dir: PathBuf::from("runs"),
            dataset: DatasetConfig::default(),
            environment: EnvConfig::default(),
            train: TrainConfig::default(),
            evaluation: EvalConfig::default(),
            heuristic: HeuristicRules::default(),
            oracle: OracleConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses TOML (`.toml`) or JSON (anything else); missing fields take
    /// their defaults. The result is validated.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let cfg = if is_toml {
            Self::from_toml(&text)?
        } else {
            Self::from_json(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("<document>", e.message().to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        self.environment.validate("environment")?;
        self.train.validate("train")?;
        self.heuristic.validate("heuristic", &self.environment)?;
        let horizon = self.environment.horizon as i64;
        for case in Case::ALL {
            let r = self.dataset.cases.get(case);
            let field = format!("dataset.cases.{case}");
            if r.hours() < horizon {
                return Err(Error::config(field, "range shorter than one episode"));
            }
            let eval_end = r.eval_start + chrono::Duration::hours(horizon);
            if r.eval_start < r.start || eval_end > r.end {
                return Err(Error::config(format!("{field}.eval_start"), "evaluation window must lie inside the range"));
            }
        }
        if let DataSource::Synth { .. } = self.dataset.source {
            if Case::ALL.iter().any(|&c| self.dataset.cases.get(c).hours() < 96) {
                return Err(Error::config("dataset.cases", "synthetic ranges need at least 96 hours"));
            }
        }
        if self.evaluation.seeds.is_empty() {
            return Err(Error::config("evaluation.seeds", "must list at least one seed"));
        }
        if !(self.evaluation.lambda >= 0.0 && self.evaluation.lambda.is_finite()) {
            return Err(Error::config("evaluation.lambda", "must be finite and >= 0"));
        }
        if self.oracle.horizon == 0 || self.oracle.horizon > MAX_HORIZON {
            return Err(Error::config("oracle.horizon", format!("must lie in 1..={MAX_HORIZON}")));
        }
        if self.oracle.grid.is_empty() || self.oracle.grid.len() > MAX_LEVELS {
            return Err(Error::config("oracle.grid", format!("needs 1..={MAX_LEVELS} levels")));
        }
        Ok(())
    }

    /// Tiny profile for quick end-to-end checks: 2 episodes of 8 steps.
    pub fn smoke(mut self) -> Self {
        self.environment.horizon = 8;
        self.train.episodes = 2;
        self.train.batch_size = 8;
        self.train.checkpoint_every = 1;
        self.train.hidden = vec![16, 16];
        self.evaluation.seeds.truncate(1);
        self
    }
}
