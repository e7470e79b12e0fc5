//! Centralized-critic, decentralized-actor training.
//!
//! A [`Scenario`] describes who the learning agents are, what each one
//! observes and how their actions combine into a [`JointAction`]. The
//! [`Trainer`] is generic over scenarios, so the single-agent baselines reuse
//! exactly the same update machinery.

mod agent;
mod buffer;
mod checkpoint;
mod policy;
mod trainer;

use serde::{Deserialize, Serialize};

pub use agent::{
    actor_gradient, actor_update, build_agents, critic_targets, critic_update, soft_update_targets, ActionScale, AgentBundle,
};
pub use buffer::{Batch, ReplayBuffer, Transition, TransitionSchema};
pub use checkpoint::{load_actors, read_manifest, CheckpointManifest, CHECKPOINT_FORMAT};
pub use policy::{evaluate, evaluate_many, Controller, EvalJob, Layout, MultiAgentPolicy};
pub use trainer::{LearningCurves, TrainingData, Trainer};

use crate::env::{EnvState, Environment, JointAction, StepOutcome};
use crate::error::{Error, Result};
use crate::nn::Activation;
use crate::timeseries::EpisodeWindow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub episodes: usize,
    pub buffer_capacity: usize,
    /// Exploration noise standard deviation as a fraction of the action
    /// half-range, annealed linearly from `noise_start` to `noise_end`.
    pub noise_start: f64,
    pub noise_end: f64,
    /// Fraction of the episodes over which the noise is annealed.
    pub noise_decay_fraction: f64,
    /// Environment steps between update rounds.
    pub update_every: usize,
    pub checkpoint_every: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Init range of each network's output layer.
    pub final_init_scale: f64,
    /// Multiplier applied to building rewards before critic regression.
    pub building_reward_scale: f64,
    /// Multiplier applied to storage rewards before critic regression.
    pub sess_reward_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            tau: 0.01,
            batch_size: 64,
            episodes: 500,
            buffer_capacity: 100_000,
            noise_start: 0.3,
            noise_end: 0.05,
            noise_decay_fraction: 0.6,
            update_every: 1,
            checkpoint_every: 50,
            hidden: vec![64, 64],
            activation: Activation::Softplus,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            final_init_scale: 3e-3,
            building_reward_scale: 0.1,
            sess_reward_scale: 10.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, field: &str) -> Result<()> {
        let bad = |name: &str, reason: &str| Err(Error::config(format!("{field}.{name}"), reason));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma", "must lie in [0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau", "must lie in (0, 1]");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be >= 1");
        }
        if self.episodes == 0 {
            return bad("episodes", "must be >= 1");
        }
        if self.buffer_capacity < self.batch_size {
            return bad("buffer_capacity", "must be >= batch_size");
        }
        for (name, v) in [("noise_start", self.noise_start), ("noise_end", self.noise_end)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(name, "must be finite and >= 0");
            }
        }
        if !(self.noise_decay_fraction > 0.0 && self.noise_decay_fraction <= 1.0) {
            return bad("noise_decay_fraction", "must lie in (0, 1]");
        }
        if self.update_every == 0 {
            return bad("update_every", "must be >= 1");
        }
        if self.checkpoint_every == 0 {
            return bad("checkpoint_every", "must be >= 1");
        }
        if self.hidden.contains(&0) {
            return bad("hidden", "layer sizes must be >= 1");
        }
        for (name, v) in [
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("final_init_scale", self.final_init_scale),
            ("building_reward_scale", self.building_reward_scale),
            ("sess_reward_scale", self.sess_reward_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(name, "must be positive");
            }
        }
        Ok(())
    }

    /// Exploration scale used during `episode` (0-based).
    pub fn noise_scale(&self, episode: usize) -> f64 {
        let span = (self.noise_decay_fraction * self.episodes as f64).max(1.0);
        let frac = (episode as f64 / span).min(1.0);
        self.noise_start + (self.noise_end - self.noise_start) * frac
    }
}

/// Interface of one learning agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub name: String,
    pub obs_dim: usize,
    pub action_lo: Vec<f64>,
    pub action_hi: Vec<f64>,
    pub reward_scale: f64,
}

impl AgentSpec {
    pub fn action_dim(&self) -> usize {
        self.action_lo.len()
    }
}

/// A learning problem built on top of [`Environment`].
pub trait Scenario: Send + Sync {
    fn name(&self) -> &str;

    fn env(&self) -> &Environment;

    fn agents(&self) -> &[AgentSpec];

    fn layout(&self) -> Layout;

    /// One observation per agent, in agent order.
    fn observe(&self, state: &EnvState, window: &EpisodeWindow) -> Result<Vec<Vec<f64>>> {
        self.layout().observe(self.env(), state, window)
    }

    /// Combines per-agent actions (physical units) into a raw joint action.
    fn joint_action(&self, actions: &[Vec<f64>]) -> JointAction {
        self.layout().assemble(self.env().n_buildings(), actions)
    }

    /// Learning reward of each agent for a step.
    fn rewards(&self, out: &StepOutcome) -> Vec<f64>;
}

pub(crate) fn building_spec(env: &Environment, i: usize, with_storage: bool, reward_scale: f64) -> AgentSpec {
    let b = &env.config().buildings[i];
    let (action_lo, action_hi) = if with_storage {
        (vec![b.p_g_min, b.p_d_min], vec![b.p_g_max, b.p_d_max])
    } else {
        (vec![b.p_g_min], vec![b.p_g_max])
    };
    AgentSpec {
        name: format!("building_{}", i + 1),
        obs_dim: if with_storage { 4 } else { 3 },
        action_lo,
        action_hi,
        reward_scale,
    }
}

/// Buildings plus the storage agent, each acting on its own observation.
#[derive(Debug, Clone)]
pub struct MultiAgentScenario {
    env: Environment,
    agents: Vec<AgentSpec>,
}

impl MultiAgentScenario {
    pub fn new(env: Environment, cfg: &TrainConfig) -> Result<Self> {
        if !env.sess_enabled() {
            return Err(Error::Invalid("multi-agent scenario needs the shared storage".into()));
        }
        let mut agents: Vec<AgentSpec> = (0..env.n_buildings())
            .map(|i| building_spec(&env, i, true, cfg.building_reward_scale))
            .collect();
        agents.push(AgentSpec {
            name: "sess".into(),
            obs_dim: 4,
            action_lo: vec![0.0],
            action_hi: vec![env.config().sess.c_max],
            reward_scale: cfg.sess_reward_scale,
        });
        Ok(Self { env, agents })
    }
}

impl Scenario for MultiAgentScenario {
    fn name(&self) -> &str {
        "proposed"
    }

    fn env(&self) -> &Environment {
        &self.env
    }

    fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    fn layout(&self) -> Layout {
        Layout::MultiAgent
    }

    fn rewards(&self, out: &StepOutcome) -> Vec<f64> {
        out.rewards.clone()
    }
}
