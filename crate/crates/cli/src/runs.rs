//! Run directories, configuration loading and policy reconstruction.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sessmarl::config::{DataSource, RunConfig};
use sessmarl::maddpg::{load_actors, Layout, MultiAgentPolicy, TrainingData};
use sessmarl::timeseries::{Case, EpisodeWindow, WindowSampler};

use crate::{ConfigArgs, TrainMethod, UsageError};

pub const CONFIG_FILE: &str = "config.json";
pub const MANIFEST_FILE: &str = "seeds.json";
pub const CHECKPOINT_DIR: &str = "checkpoint";

/// What a run directory was produced by; together with `config.json` it is
/// enough to replay the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub method: String,
    pub case: Case,
    pub seed: u64,
    pub created: String,
}

/// Reads the configuration named on the command line (or the defaults),
/// applies the overrides and validates the result. Relative CSV paths are
/// made absolute against the config file's directory.
pub fn load_config(args: &ConfigArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::from_file(p).map_err(|e| UsageError(format!("{}: {e}", p.display())))?,
        None => RunConfig::default(),
    };
    if let (DataSource::Csv { path }, Some(cfg_path)) = (&mut cfg.dataset.source, &args.config) {
        if path.is_relative() {
            let base = cfg_path.parent().unwrap_or(Path::new("."));
            *path = base.join(&*path);
        }
    }
    if args.smoke {
        cfg = cfg.smoke();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(cfg)
}

pub fn training_data(cfg: &RunConfig, case: Case) -> Result<TrainingData> {
    let series = cfg
        .dataset
        .series(case, Path::new("."))
        .with_context(|| format!("loading {case} data"))?;
    Ok(TrainingData {
        series: Arc::new(series),
        sampler: WindowSampler::new(cfg.dataset.cases.clone(), cfg.environment.horizon),
        case,
    })
}

pub fn eval_window(cfg: &RunConfig, case: Case) -> Result<EpisodeWindow> {
    let data = training_data(cfg, case)?;
    Ok(data.sampler.eval_window(&data.series, case)?)
}

pub fn timestamp() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    chrono::DateTime::from_timestamp(secs as i64, 0)
        .map(|t| t.format("%Y%m%dT%H%M%SZ").to_string())
        .unwrap_or_else(|| secs.to_string())
}

/// Creates `<out>/<method>-<case>-<seed>-<timestamp>` (with a numeric suffix
/// on collision) and writes the resolved config and run manifest into it.
pub fn create_run_dir(cfg: &RunConfig, method: TrainMethod, case: Case) -> Result<(PathBuf, RunManifest)> {
    let created = timestamp();
    let stem = format!("{}-{}-{}-{}", method.as_str(), case, cfg.seed, created);
    let mut dir = cfg.output_dir.join(&stem);
    let mut n = 1;
    while dir.exists() {
        dir = cfg.output_dir.join(format!("{stem}-{n}"));
        n += 1;
    }
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let manifest = RunManifest {
        method: method.as_str().into(),
        case,
        seed: cfg.seed,
        created,
    };
    write_json(&dir.join(CONFIG_FILE), cfg)?;
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok((dir, manifest))
}

pub fn read_run(dir: &Path) -> Result<(RunManifest, RunConfig)> {
    let manifest: RunManifest = read_json(&dir.join(MANIFEST_FILE))
        .map_err(|e| UsageError(format!("{} is not a run directory: {e:#}", dir.display())))?;
    let cfg = RunConfig::from_file(&dir.join(CONFIG_FILE)).map_err(|e| UsageError(e.to_string()))?;
    Ok((manifest, cfg))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value)?;
    std::fs::write(path, s + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&s).with_context(|| format!("parsing {}", path.display()))
}

/// Deployed policy of a trained run.
pub fn policy_from_run(dir: &Path, manifest: &RunManifest, n_buildings: usize) -> Result<MultiAgentPolicy> {
    let ckpt = dir.join(CHECKPOINT_DIR);
    let missing = |p: &Path| UsageError(format!("missing checkpoint {}", p.display()));
    let policy = match manifest.method.as_str() {
        "proposed" | "centralized" => {
            let path = ckpt.join("manifest.json");
            if !path.exists() {
                return Err(missing(&ckpt).into());
            }
            let (m, actors) = load_actors(&ckpt)?;
            let layout = if manifest.method == "proposed" {
                Layout::MultiAgent
            } else {
                Layout::Centralized
            };
            MultiAgentPolicy::new(manifest.method.clone(), layout, m.agents, actors)?
        }
        "user_only" => {
            let mut specs = Vec::new();
            let mut actors = Vec::new();
            for i in 1..=n_buildings {
                let d = ckpt.join(format!("building_{i}"));
                if !d.join("manifest.json").exists() {
                    return Err(missing(&d).into());
                }
                let (m, a) = load_actors(&d)?;
                specs.extend(m.agents);
                actors.extend(a);
            }
            MultiAgentPolicy::new("user_only", Layout::GridOnly, specs, actors)?
        }
        other => bail!(UsageError(format!("unknown method `{other}` in {}", dir.display()))),
    };
    Ok(policy)
}
