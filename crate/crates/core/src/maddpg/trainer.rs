use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::agent::{actor_update, build_agents, critic_targets, critic_update, soft_update_targets, ActionScale, AgentBundle};
use super::buffer::{ReplayBuffer, Transition, TransitionSchema};
use super::policy::MultiAgentPolicy;
use super::{Scenario, TrainConfig};
use crate::error::{Error, Result};
use crate::timeseries::{Case, PriceTemperatureSeries, WindowMode, WindowSampler};

/// Where training episodes come from.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub series: Arc<PriceTemperatureSeries>,
    pub sampler: WindowSampler,
    pub case: Case,
}

/// Undiscounted, unscaled per-agent return of every finished episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurves {
    pub agents: Vec<String>,
    /// `returns[episode][agent]`.
    pub returns: Vec<Vec<f64>>,
}

impl LearningCurves {
    pub fn new(agents: Vec<String>) -> Self {
        Self {
            agents,
            returns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    /// Return series of one agent.
    pub fn agent(&self, i: usize) -> Vec<f64> {
        self.returns.iter().map(|r| r[i]).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Csv(e))?;
        let mut header = vec!["episode".to_string()];
        header.extend(self.agents.iter().cloned());
        w.write_record(&header)?;
        for (e, row) in self.returns.iter().enumerate() {
            let mut rec = vec![(e + 1).to_string()];
            rec.extend(row.iter().map(|x| format!("{x:?}")));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let agents: Vec<String> = r.headers()?.iter().skip(1).map(str::to_string).collect();
        let mut returns = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .skip(1)
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::MalformedRow {
                    line: line as u64 + 2,
                    reason: e.to_string(),
                })?;
            returns.push(row);
        }
        Ok(Self { agents, returns })
    }
}

/// Algorithm loop over any [`Scenario`]. Every random draw (window starts,
/// exploration noise, mini-batches) comes from one seeded generator, so
/// `(seed, config, data)` determines the whole run.
pub struct Trainer<S: Scenario> {
    pub(crate) scenario: S,
    pub(crate) cfg: TrainConfig,
    pub(crate) data: TrainingData,
    pub(crate) seed: u64,
    pub(crate) agents: Vec<AgentBundle>,
    pub(crate) buffer: ReplayBuffer,
    pub(crate) scale: ActionScale,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) episode: usize,
    pub(crate) steps: u64,
    pub(crate) curves: LearningCurves,
}

impl<S: Scenario> Trainer<S> {
    pub fn new(scenario: S, cfg: TrainConfig, data: TrainingData, seed: u64) -> Result<Self> {
        cfg.validate("train")?;
        if data.sampler.length != scenario.env().horizon() {
            return Err(Error::Invalid(format!(
                "window length {} differs from horizon {}",
                data.sampler.length,
                scenario.env().horizon()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let specs = scenario.agents().to_vec();
        let agents = build_agents(&specs, &cfg, &mut rng)?;
        let schema = TransitionSchema {
            state_dim: specs.iter().map(|s| s.obs_dim).sum(),
            action_dim: specs.iter().map(|s| s.action_dim()).sum(),
            n_rewards: specs.len(),
        };
        let buffer = ReplayBuffer::new(schema, cfg.buffer_capacity)?;
        let curves = LearningCurves::new(specs.iter().map(|s| s.name.clone()).collect());
        Ok(Self {
            scale: ActionScale::from_specs(&specs),
            scenario,
            cfg,
            data,
            seed,
            agents,
            buffer,
            rng,
            episode: 0,
            steps: 0,
            curves,
        })
    }

    pub fn scenario(&self) -> &S {
        &self.scenario
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn agents(&self) -> &[AgentBundle] {
        &self.agents
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn curves(&self) -> &LearningCurves {
        &self.curves
    }

    /// Finished episodes.
    pub fn episode(&self) -> usize {
        self.episode
    }

    /// Environment steps taken so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.episode >= self.cfg.episodes
    }

    /// Noise-free snapshot of the current actors.
    pub fn policy(&self) -> MultiAgentPolicy {
        MultiAgentPolicy::from_agents(&self.scenario, &self.agents)
    }

    /// Plays one training episode, learning along the way; returns the
    /// unscaled per-agent returns.
    pub fn run_episode(&mut self) -> Result<Vec<f64>> {
        let env = self.scenario.env().clone();
        let window = self
            .data
            .sampler
            .sample(&self.data.series, self.data.case, WindowMode::Train, &mut self.rng)?;
        let mut state = env.reset(&window)?;
        let noise = self.cfg.noise_scale(self.episode);
        let n = self.agents.len();
        let mut returns = vec![0.0; n];
        let mut obs = self.scenario.observe(&state, &window)?;
        for k in 0..env.horizon() {
            let actions = self
                .agents
                .iter()
                .zip(&obs)
                .map(|(a, o)| a.act(o, noise, &mut self.rng))
                .collect::<Result<Vec<_>>>()?;
            let out = env.step(&state, &self.scenario.joint_action(&actions), &window)?;
            let rewards = self.scenario.rewards(&out);
            for (r, x) in returns.iter_mut().zip(&rewards) {
                *r += x;
            }
            let next_obs = if out.terminal {
                // never bootstrapped from; any well-formed vector will do
                obs.clone()
            } else {
                self.scenario.observe(&out.next_state, &window)?
            };
            self.buffer.push(Transition {
                state: obs.concat(),
                action: actions.concat(),
                rewards,
                next_state: next_obs.concat(),
                terminal: out.terminal,
            })?;
            self.steps += 1;
            if self.buffer.len() >= self.cfg.batch_size && self.steps % self.cfg.update_every as u64 == 0 {
                self.update_round().map_err(|e| match e {
                    Error::Divergence(m) => Error::Divergence(format!("episode {} step {k}: {m}", self.episode + 1)),
                    other => other,
                })?;
            }
            state = out.next_state;
            obs = next_obs;
        }
        self.episode += 1;
        self.curves.returns.push(returns.clone());
        Ok(returns)
    }

    fn update_round(&mut self) -> Result<()> {
        for i in 0..self.agents.len() {
            let batch = self.buffer.sample(self.cfg.batch_size, &mut self.rng)?;
            let y = critic_targets(&batch, &self.agents, i, self.cfg.gamma, &self.scale)?;
            critic_update(&mut self.agents[i], &batch, &y, &self.scale)?;
            actor_update(&mut self.agents[i], &batch, &self.scale)?;
            soft_update_targets(&mut self.agents[i], self.cfg.tau)?;
        }
        Ok(())
    }

    /// Runs the remaining episodes. With a checkpoint directory, state is
    /// saved every `checkpoint_every` episodes and at the end.
    pub fn train(&mut self, checkpoint_dir: Option<&Path>) -> Result<&LearningCurves> {
        self.train_with(checkpoint_dir, |_, _| {})
    }

    /// [`Trainer::train`] with `progress(episode, returns)` called after every
    /// finished episode (1-based).
    pub fn train_with<F>(&mut self, checkpoint_dir: Option<&Path>, mut progress: F) -> Result<&LearningCurves>
    where
        F: FnMut(usize, &[f64]),
    {
        while !self.is_done() {
            let r = self.run_episode()?;
            log::info!("{} episode {}: returns {:?}", self.scenario.name(), self.episode, r);
            progress(self.episode, &r);
            if let Some(dir) = checkpoint_dir {
                if self.episode % self.cfg.checkpoint_every == 0 || self.is_done() {
                    self.save_checkpoint(dir)?;
                }
            }
        }
        Ok(&self.curves)
    }
}
