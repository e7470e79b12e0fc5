use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::agent::AgentBundle;
use super::{AgentSpec, Scenario};
use crate::env::{BuildingAction, EnvState, Environment, JointAction};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::nn::MlpParams;
use crate::timeseries::EpisodeWindow;
use crate::trace::EpisodeTrace;

/// Anything that maps the simulator state to a raw joint action.
pub trait Controller: Send + Sync {
    fn method(&self) -> &str;

    fn act(&self, env: &Environment, state: &EnvState, window: &EpisodeWindow) -> Result<JointAction>;
}

/// How a set of agents sees the environment and how their outputs combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// One agent per building with `(T_in, T_out, p, soc)` and `(P_g, P_d)`,
    /// plus the storage agent with `(T_out, p, p_bar, soc)` and `c`.
    MultiAgent,
    /// One agent per building with `(T_in, T_out, p)` and `P_g` only.
    GridOnly,
    /// A single agent over the deduplicated union of observations acting on
    /// `(P_g_1, P_d_1, .., P_g_N, P_d_N, c)`.
    Centralized,
}

impl Layout {
    /// One observation per agent, each built only from what that agent sees.
    pub fn observe(self, env: &Environment, state: &EnvState, window: &EpisodeWindow) -> Result<Vec<Vec<f64>>> {
        match self {
            Layout::MultiAgent => env.observations(state, window),
            Layout::GridOnly => (0..env.n_buildings())
                .map(|i| env.building_observation(state, window, i, false))
                .collect(),
            Layout::Centralized => Ok(vec![env.central_observation(state, window)?]),
        }
    }

    pub fn assemble(self, n_buildings: usize, actions: &[Vec<f64>]) -> JointAction {
        let flat: Vec<f64> = actions.concat();
        match self {
            Layout::MultiAgent | Layout::Centralized => JointAction {
                buildings: (0..n_buildings)
                    .map(|i| BuildingAction {
                        p_g: flat[2 * i],
                        p_d: flat[2 * i + 1],
                    })
                    .collect(),
                charge: flat[2 * n_buildings],
            },
            Layout::GridOnly => JointAction {
                buildings: flat[..n_buildings]
                    .iter()
                    .map(|&p_g| BuildingAction { p_g, p_d: 0.0 })
                    .collect(),
                charge: 0.0,
            },
        }
    }
}

/// Deployed actors without exploration noise. Each actor receives only its
/// own observation vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiAgentPolicy {
    pub method: String,
    pub layout: Layout,
    pub specs: Vec<AgentSpec>,
    pub actors: Vec<MlpParams>,
}

impl MultiAgentPolicy {
    pub fn new(method: impl Into<String>, layout: Layout, specs: Vec<AgentSpec>, actors: Vec<MlpParams>) -> Result<Self> {
        if specs.len() != actors.len() {
            return Err(Error::Dimension("one actor per agent required".into()));
        }
        for (s, a) in specs.iter().zip(&actors) {
            if a.input_dim() != s.obs_dim || a.output_dim() != s.action_dim() {
                return Err(Error::Dimension(format!("actor of {} has the wrong shape", s.name)));
            }
        }
        Ok(Self {
            method: method.into(),
            layout,
            specs,
            actors,
        })
    }

    pub fn from_agents<S: Scenario + ?Sized>(scenario: &S, agents: &[AgentBundle]) -> Self {
        Self {
            method: scenario.name().to_string(),
            layout: scenario.layout(),
            specs: agents.iter().map(|a| a.spec.clone()).collect(),
            actors: agents.iter().map(|a| a.actor.clone()).collect(),
        }
    }

    /// Deterministic action of every agent from its own observation.
    pub fn local_actions(&self, obs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if obs.len() != self.actors.len() {
            return Err(Error::Dimension(format!(
                "{} observations for {} agents",
                obs.len(),
                self.actors.len()
            )));
        }
        self.actors.iter().zip(obs).map(|(a, o)| a.predict(o)).collect()
    }
}

impl Controller for MultiAgentPolicy {
    fn method(&self) -> &str {
        &self.method
    }

    fn act(&self, env: &Environment, state: &EnvState, window: &EpisodeWindow) -> Result<JointAction> {
        let obs = self.layout.observe(env, state, window)?;
        Ok(self.layout.assemble(env.n_buildings(), &self.local_actions(&obs)?))
    }
}

/// One noise-free episode of `controller` on `window`.
pub fn evaluate(controller: &dyn Controller, env: &Environment, window: &EpisodeWindow) -> Result<EpisodeTrace> {
    env.rollout(window, controller.method(), |e, s, w| controller.act(e, s, w))
}

/// An independent evaluation rollout.
#[derive(Clone)]
pub struct EvalJob {
    pub controller: Arc<dyn Controller>,
    pub env: Environment,
    pub window: EpisodeWindow,
}

/// Runs independent rollouts, in parallel when `exec` allows; results keep
/// the job order.
pub fn evaluate_many(jobs: &[EvalJob], exec: Execution) -> Result<Vec<EpisodeTrace>> {
    exec.map(jobs, |j| evaluate(j.controller.as_ref(), &j.env, &j.window))
        .into_iter()
        .collect()
}
