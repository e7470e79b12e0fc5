//! On-disk training state.
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/agent_<i>/{actor,critic,target_actor,target_critic}.json
//! <dir>/agent_<i>/optim.json
//! <dir>/rng.json
//! <dir>/buffer.bin
//! <dir>/curves.csv
//! ```

use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::buffer::ReplayBuffer;
use super::trainer::{LearningCurves, Trainer, TrainingData};
use super::{AgentSpec, Scenario, TrainConfig};
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::nn::{load_network, read_json, save_network, write_json, Adam, MlpParams};
use crate::timeseries::Case;

pub const CHECKPOINT_FORMAT: &str = "sessmarl-checkpoint/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format: String,
    pub scenario: String,
    pub case: Case,
    pub seed: u64,
    pub config_hash: String,
    pub episode: usize,
    pub steps: u64,
    pub sess_enabled: bool,
    pub agents: Vec<AgentSpec>,
    pub train: TrainConfig,
    pub environment: EnvConfig,
}

#[derive(Serialize, Deserialize)]
struct OptimState {
    actor: Adam,
    critic: Adam,
}

/// SHA-256 over everything that shapes a run besides the data itself.
pub(crate) fn config_hash(
    scenario: &str,
    case: Case,
    seed: u64,
    train: &TrainConfig,
    env: &EnvConfig,
    sess_enabled: bool,
) -> Result<String> {
    let blob = serde_json::to_string(&(scenario, case, seed, train, env, sess_enabled))?;
    let digest = Sha256::digest(blob.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn agent_dir(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("agent_{i}"))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

impl<S: Scenario> Trainer<S> {
    pub fn config_hash(&self) -> Result<String> {
        let env = self.scenario.env();
        config_hash(
            self.scenario.name(),
            self.data.case,
            self.seed,
            &self.cfg,
            env.config(),
            env.sess_enabled(),
        )
    }

    pub fn manifest(&self) -> Result<CheckpointManifest> {
        let env = self.scenario.env();
        Ok(CheckpointManifest {
            format: CHECKPOINT_FORMAT.into(),
            scenario: self.scenario.name().into(),
            case: self.data.case,
            seed: self.seed,
            config_hash: self.config_hash()?,
            episode: self.episode,
            steps: self.steps,
            sess_enabled: env.sess_enabled(),
            agents: self.scenario.agents().to_vec(),
            train: self.cfg.clone(),
            environment: env.config().clone(),
        })
    }

    /// Writes the complete resumable state into `dir`.
    pub fn save_checkpoint(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        let manifest = self.manifest()?;
        for (i, a) in self.agents.iter().enumerate() {
            let d = agent_dir(dir, i);
            create_dir(&d)?;
            for (name, net) in [
                ("actor", &a.actor),
                ("critic", &a.critic),
                ("target_actor", &a.target_actor),
                ("target_critic", &a.target_critic),
            ] {
                save_network(&d.join(format!("{name}.json")), net, &manifest.config_hash)?;
            }
            write_json(
                &d.join("optim.json"),
                &OptimState {
                    actor: a.actor_opt.clone(),
                    critic: a.critic_opt.clone(),
                },
            )?;
        }
        write_json(&dir.join("rng.json"), &self.rng)?;
        let path = dir.join("buffer.bin");
        std::fs::write(&path, self.buffer.to_bytes()).map_err(|e| Error::io(&path, e))?;
        self.curves.write_csv(&dir.join("curves.csv"))?;
        // manifest last: its presence marks a complete checkpoint
        write_json(&dir.join("manifest.json"), &manifest)
    }

    /// Rebuilds a trainer from `dir`. The scenario, config, case and seed
    /// must hash to the value recorded in the checkpoint.
    pub fn resume(scenario: S, cfg: TrainConfig, data: TrainingData, seed: u64, dir: &Path) -> Result<Self> {
        let manifest = read_manifest(dir)?;
        let mut t = Trainer::new(scenario, cfg, data, seed)?;
        let expected = t.config_hash()?;
        if manifest.config_hash != expected {
            return Err(Error::Checkpoint(format!(
                "{}: configuration hash {} does not match {}",
                dir.display(),
                manifest.config_hash,
                expected
            )));
        }
        for (i, a) in t.agents.iter_mut().enumerate() {
            let d = agent_dir(dir, i);
            for (name, slot) in [
                ("actor", &mut a.actor),
                ("critic", &mut a.critic),
                ("target_actor", &mut a.target_actor),
                ("target_critic", &mut a.target_critic),
            ] {
                let f = load_network(&d.join(format!("{name}.json")))?;
                if !f.params.same_shape(slot) {
                    return Err(Error::Checkpoint(format!("agent {i} {name}: shape mismatch")));
                }
                *slot = f.params;
            }
            let opt: OptimState = read_json(&d.join("optim.json"))?;
            a.actor_opt = opt.actor;
            a.critic_opt = opt.critic;
        }
        t.rng = read_json::<ChaCha8Rng>(&dir.join("rng.json"))?;
        let path = dir.join("buffer.bin");
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let buffer = ReplayBuffer::from_bytes(&bytes)?;
        if buffer.schema() != t.buffer.schema() {
            return Err(Error::Checkpoint("replay buffer schema mismatch".into()));
        }
        t.buffer = buffer;
        t.curves = LearningCurves::read_csv(&dir.join("curves.csv"))?;
        if t.curves.len() != manifest.episode {
            return Err(Error::Checkpoint("learning curve length differs from episode count".into()));
        }
        t.episode = manifest.episode;
        t.steps = manifest.steps;
        Ok(t)
    }
}

pub fn read_manifest(dir: &Path) -> Result<CheckpointManifest> {
    let m: CheckpointManifest = read_json(&dir.join("manifest.json"))?;
    if m.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!(
            "{}: unsupported format `{}`",
            dir.display(),
            m.format
        )));
    }
    Ok(m)
}

/// Manifest and online actors of a checkpoint, enough for evaluation.
pub fn load_actors(dir: &Path) -> Result<(CheckpointManifest, Vec<MlpParams>)> {
    let m = read_manifest(dir)?;
    let actors = (0..m.agents.len())
        .map(|i| {
            let f = load_network(&agent_dir(dir, i).join("actor.json"))?;
            if f.config_hash != m.config_hash {
                return Err(Error::Checkpoint(format!("agent {i} actor belongs to another run")));
            }
            if f.params.input_dim() != m.agents[i].obs_dim || f.params.output_dim() != m.agents[i].action_dim() {
                return Err(Error::Checkpoint(format!("agent {i} actor has the wrong shape")));
            }
            Ok(f.params)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((m, actors))
}
