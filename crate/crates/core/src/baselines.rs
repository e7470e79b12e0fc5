//! Comparison schemes: a fixed rule set, buildings learning alone without
//! the shared storage, and one agent controlling everything.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{BuildingAction, EnvConfig, EnvState, Environment, JointAction, StepOutcome};
use crate::error::{Error, Result};
use crate::maddpg::{
    building_spec, AgentSpec, Controller, Layout, MultiAgentPolicy, Scenario, TrainConfig, Trainer, TrainingData,
};
use crate::timeseries::EpisodeWindow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeuristicRules {
    /// Storage charging power when the price is below its average, kW.
    pub charge_power_when_cheap: f64,
    /// Magnitude of both HVAC power inputs, kW.
    pub hvac_power_magnitude: f64,
    /// Outdoor temperature below which buildings heat, degC.
    pub temp_threshold: f64,
}

impl Default for HeuristicRules {
    fn default() -> Self {
        Self {
            charge_power_when_cheap: 5.0,
            hvac_power_magnitude: 1.0,
            temp_threshold: 0.0,
        }
    }
}

impl HeuristicRules {
    pub fn validate(&self, field: &str, env: &EnvConfig) -> Result<()> {
        let c = self.charge_power_when_cheap;
        if !(c >= 0.0 && c <= env.sess.c_max) {
            return Err(Error::config(
                format!("{field}.charge_power_when_cheap"),
                "must lie in [0, c_max]",
            ));
        }
        let h = self.hvac_power_magnitude;
        let fits = env
            .buildings
            .iter()
            .all(|b| h >= 0.0 && -h >= b.p_g_min && h <= b.p_g_max && -h >= b.p_d_min && h <= b.p_d_max);
        if !fits {
            return Err(Error::config(
                format!("{field}.hvac_power_magnitude"),
                "must fit every building's action box",
            ));
        }
        if !self.temp_threshold.is_finite() {
            return Err(Error::config(format!("{field}.temp_threshold"), "must be finite"));
        }
        Ok(())
    }
}

/// Raw rule action; the environment projects it like any other action.
pub fn heuristic_policy(n_buildings: usize, price: f64, p_bar: f64, t_out: f64, rules: &HeuristicRules) -> JointAction {
    let charge = if price < p_bar { rules.charge_power_when_cheap } else { 0.0 };
    let h = if t_out < rules.temp_threshold {
        rules.hvac_power_magnitude
    } else {
        -rules.hvac_power_magnitude
    };
    JointAction {
        buildings: vec![BuildingAction { p_g: h, p_d: h }; n_buildings],
        charge,
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HeuristicPolicy {
    pub rules: HeuristicRules,
}

impl Controller for HeuristicPolicy {
    fn method(&self) -> &str {
        "heuristic"
    }

    fn act(&self, env: &Environment, state: &EnvState, window: &EpisodeWindow) -> Result<JointAction> {
        if state.k >= window.len() {
            return Err(Error::EpisodeFinished {
                k: state.k,
                horizon: env.horizon(),
            });
        }
        Ok(heuristic_policy(
            env.n_buildings(),
            env.price(window, state.k),
            state.p_bar,
            window.outdoor_temps[state.k],
            &self.rules,
        ))
    }
}

/// Single building `index` of a community, alone and without storage.
#[derive(Debug, Clone)]
pub struct UserOnlyScenario {
    env: Environment,
    index: usize,
    agents: Vec<AgentSpec>,
}

impl UserOnlyScenario {
    pub fn new(community: &EnvConfig, index: usize, cfg: &TrainConfig) -> Result<Self> {
        if index >= community.buildings.len() {
            return Err(Error::Invalid(format!("no building {index}")));
        }
        let mut single = community.clone();
        single.buildings = vec![community.buildings[index].clone()];
        if let Some(t) = &community.initial.temps {
            single.initial.temps = Some(vec![t[index]]);
        }
        single.initial.soc = 0.0;
        let env = Environment::new(single)?.without_sess();
        let mut spec = building_spec(&env, 0, false, cfg.building_reward_scale);
        spec.name = format!("building_{}", index + 1);
        Ok(Self {
            env,
            index,
            agents: vec![spec],
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }
}

impl Scenario for UserOnlyScenario {
    fn name(&self) -> &str {
        "user_only"
    }

    fn env(&self) -> &Environment {
        &self.env
    }

    fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    fn layout(&self) -> Layout {
        Layout::GridOnly
    }

    fn rewards(&self, out: &StepOutcome) -> Vec<f64> {
        vec![out.rewards[0]]
    }
}

/// Trains every building independently; checkpoints go to
/// `<dir>/building_<i>` when a directory is given.
pub fn train_user_only(
    community: &EnvConfig,
    data: &TrainingData,
    cfg: &TrainConfig,
    seed: u64,
    checkpoint_dir: Option<&Path>,
) -> Result<Vec<Trainer<UserOnlyScenario>>> {
    (0..community.buildings.len())
        .map(|i| {
            let scenario = UserOnlyScenario::new(community, i, cfg)?;
            let mut t = Trainer::new(scenario, cfg.clone(), data.clone(), seed.wrapping_add(i as u64))?;
            let dir = checkpoint_dir.map(|d| d.join(format!("building_{}", i + 1)));
            t.train(dir.as_deref())?;
            Ok(t)
        })
        .collect()
}

/// Joins independently trained buildings into one community controller.
pub fn user_only_policy(trainers: &[Trainer<UserOnlyScenario>]) -> Result<MultiAgentPolicy> {
    MultiAgentPolicy::new(
        "user_only",
        Layout::GridOnly,
        trainers.iter().map(|t| t.agents()[0].spec.clone()).collect(),
        trainers.iter().map(|t| t.agents()[0].actor.clone()).collect(),
    )
}

/// One agent seeing `(T_in_1..T_in_N, T_out, p, p_bar, soc)` and choosing the
/// whole joint action, rewarded with the sum of all per-agent rewards.
#[derive(Debug, Clone)]
pub struct CentralizedScenario {
    env: Environment,
    agents: Vec<AgentSpec>,
}

impl CentralizedScenario {
    pub fn new(env: Environment, cfg: &TrainConfig) -> Result<Self> {
        if !env.sess_enabled() {
            return Err(Error::Invalid("centralized scenario needs the shared storage".into()));
        }
        let n = env.n_buildings();
        let mut lo = Vec::with_capacity(2 * n + 1);
        let mut hi = Vec::with_capacity(2 * n + 1);
        for b in &env.config().buildings {
            lo.extend([b.p_g_min, b.p_d_min]);
            hi.extend([b.p_g_max, b.p_d_max]);
        }
        lo.push(0.0);
        hi.push(env.config().sess.c_max);
        let agents = vec![AgentSpec {
            name: "central".into(),
            obs_dim: n + 4,
            action_lo: lo,
            action_hi: hi,
            reward_scale: cfg.building_reward_scale,
        }];
        Ok(Self { env, agents })
    }
}

impl Scenario for CentralizedScenario {
    fn name(&self) -> &str {
        "centralized"
    }

    fn env(&self) -> &Environment {
        &self.env
    }

    fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    fn layout(&self) -> Layout {
        Layout::Centralized
    }

    fn rewards(&self, out: &StepOutcome) -> Vec<f64> {
        vec![out.rewards.iter().sum()]
    }
}

pub fn train_centralized(
    env: Environment,
    data: &TrainingData,
    cfg: &TrainConfig,
    seed: u64,
    checkpoint_dir: Option<&Path>,
) -> Result<Trainer<CentralizedScenario>> {
    let scenario = CentralizedScenario::new(env, cfg)?;
    let mut t = Trainer::new(scenario, cfg.clone(), data.clone(), seed)?;
    t.train(checkpoint_dir)?;
    Ok(t)
}
