//! Coupled building / shared-storage simulator.
//!
//! State ordering convention used everywhere downstream: buildings `1..N`
//! first, the storage agent last.

pub mod objective;
pub mod reward;
pub mod sess;
pub mod thermal;

use serde::{Deserialize, Serialize};

pub use objective::{objective_cost, step_objective, CostVariant};
pub use reward::{building_reward, sess_reward, RewardConfig};
pub use sess::{project_actions, sess_step, BuildingAction, JointAction, SessParams};
pub use thermal::{building_step, discretize, BuildingParams, ThermalDeltas};

use crate::error::{Error, Result};
use crate::timeseries::{EpisodeWindow, PriceAverage};
use crate::trace::{EpisodeTrace, TraceStep};

/// Dataset prices are per MWh; the simulator works per kWh.
pub const MWH_TO_KWH: f64 = 1e-3;

/// Affine normalization `(x - offset) / scale` applied to observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObsScale {
    pub temp_offset: f64,
    pub temp_scale: f64,
    /// Currency per kWh.
    pub price_offset: f64,
    pub price_scale: f64,
    pub soc_scale: f64,
}

impl Default for ObsScale {
    fn default() -> Self {
        Self {
            temp_offset: 20.0,
            temp_scale: 10.0,
            price_offset: 0.05,
            price_scale: 0.02,
            soc_scale: 10.0,
        }
    }
}

/// Kind of an observation component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObsKind {
    Temperature,
    Price,
    Soc,
}

impl ObsScale {
    fn affine(&self, kind: ObsKind) -> (f64, f64) {
        match kind {
            ObsKind::Temperature => (self.temp_offset, self.temp_scale),
            ObsKind::Price => (self.price_offset, self.price_scale),
            ObsKind::Soc => (0.0, self.soc_scale),
        }
    }

    #[inline]
    pub fn normalize(&self, kind: ObsKind, x: f64) -> f64 {
        let (o, s) = self.affine(kind);
        (x - o) / s
    }

    #[inline]
    pub fn denormalize(&self, kind: ObsKind, z: f64) -> f64 {
        let (o, s) = self.affine(kind);
        z * s + o
    }

    fn validate(&self, field: &str) -> Result<()> {
        for (name, v) in [
            ("temp_scale", self.temp_scale),
            ("price_scale", self.price_scale),
            ("soc_scale", self.soc_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{field}.{name}"), "must be positive"));
            }
        }
        if !self.temp_offset.is_finite() || !self.price_offset.is_finite() {
            return Err(Error::config(format!("{field}.temp_offset"), "offsets must be finite"));
        }
        Ok(())
    }
}

/// Observation layout of a building agent.
pub const BUILDING_OBS: [ObsKind; 4] = [
    ObsKind::Temperature,
    ObsKind::Temperature,
    ObsKind::Price,
    ObsKind::Soc,
];
/// Observation layout of the storage agent.
pub const SESS_OBS: [ObsKind; 4] = [ObsKind::Temperature, ObsKind::Price, ObsKind::Price, ObsKind::Soc];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConditions {
    /// Per-building start temperatures; `None` starts every building at its
    /// target.
    pub temps: Option<Vec<f64>>,
    pub soc: f64,
}

impl Default for InitialConditions {
    fn default() -> Self {
        Self { temps: None, soc: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub buildings: Vec<BuildingParams>,
    pub sess: SessParams,
    pub reward: RewardConfig,
    /// Smoothing factor of the reference price.
    pub eta: f64,
    /// Steps per episode.
    pub horizon: usize,
    /// Hours per step.
    pub dt: f64,
    pub initial: InitialConditions,
    pub obs_scale: ObsScale,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            buildings: vec![BuildingParams::reference_1(), BuildingParams::reference_2()],
            sess: SessParams::default(),
            reward: RewardConfig::default(),
            eta: 0.2,
            horizon: 96,
            dt: 1.0,
            initial: InitialConditions::default(),
            obs_scale: ObsScale::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self, field: &str) -> Result<()> {
        if self.buildings.is_empty() {
            return Err(Error::config(format!("{field}.buildings"), "at least one building required"));
        }
        for (i, b) in self.buildings.iter().enumerate() {
            b.validate(&format!("{field}.buildings[{i}]"))?;
            discretize(b, self.dt).map_err(|e| Error::config(format!("{field}.buildings[{i}]"), e.to_string()))?;
        }
        self.sess.validate(&format!("{field}.sess"))?;
        self.reward.validate(&format!("{field}.reward"))?;
        self.obs_scale.validate(&format!("{field}.obs_scale"))?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::config(format!("{field}.eta"), "must lie in (0, 1]"));
        }
        if self.horizon == 0 {
            return Err(Error::config(format!("{field}.horizon"), "must be >= 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("{field}.dt"), "must be positive"));
        }
        if let Some(t) = &self.initial.temps {
            if t.len() != self.buildings.len() || t.iter().any(|x| !x.is_finite()) {
                return Err(Error::config(
                    format!("{field}.initial.temps"),
                    "needs one finite temperature per building",
                ));
            }
        }
        if !(self.initial.soc >= 0.0 && self.initial.soc <= self.sess.soc_max) {
            return Err(Error::config(format!("{field}.initial.soc"), "must lie in [0, soc_max]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub indoor_temps: Vec<f64>,
    /// kWh.
    pub soc: f64,
    pub k: usize,
    /// Smoothed reference price, currency per kWh.
    pub p_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub price: f64,
    pub p_bar: f64,
    pub t_out: f64,
    pub grid_cost: Vec<f64>,
    pub charge_cost: f64,
    /// `|T_in_next - T_target|` per building.
    pub temp_deviation: Vec<f64>,
    pub discharge: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: EnvState,
    /// The projected (feasible) action that was applied.
    pub action: JointAction,
    /// Buildings first, storage last.
    pub rewards: Vec<f64>,
    pub info: StepInfo,
    pub terminal: bool,
}

/// Simulator for one community. Parameters are immutable after construction;
/// episode state lives in [`EnvState`] values owned by the caller.
#[derive(Debug, Clone)]
pub struct Environment {
    cfg: EnvConfig,
    deltas: Vec<ThermalDeltas>,
    sess_enabled: bool,
}

impl Environment {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate("environment")?;
        let deltas = cfg
            .buildings
            .iter()
            .map(|b| discretize(b, cfg.dt))
            .collect::<Result<Vec<_>>>()?;
        log::debug!(
            "observation normalization: temp (x-{})/{}, price (x-{})/{}, soc x/{}",
            cfg.obs_scale.temp_offset,
            cfg.obs_scale.temp_scale,
            cfg.obs_scale.price_offset,
            cfg.obs_scale.price_scale,
            cfg.obs_scale.soc_scale
        );
        Ok(Self {
            cfg,
            deltas,
            sess_enabled: true,
        })
    }

    /// Variant without the shared storage: `P_d` and `c` are forced to zero
    /// and the storage reward is always zero.
    pub fn without_sess(mut self) -> Self {
        self.sess_enabled = false;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.cfg.horizon = horizon;
        self
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn deltas(&self) -> &[ThermalDeltas] {
        &self.deltas
    }

    pub fn sess_enabled(&self) -> bool {
        self.sess_enabled
    }

    pub fn n_buildings(&self) -> usize {
        self.cfg.buildings.len()
    }

    pub fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    pub fn targets(&self) -> Vec<f64> {
        self.cfg.buildings.iter().map(|b| b.t_target).collect()
    }

    #[inline]
    pub fn price(&self, window: &EpisodeWindow, k: usize) -> f64 {
        window.prices[k] * MWH_TO_KWH
    }

    pub fn reset(&self, window: &EpisodeWindow) -> Result<EnvState> {
        let temps = self.cfg.initial.temps.clone().unwrap_or_else(|| self.targets());
        self.reset_with(window, &temps, self.cfg.initial.soc)
    }

    pub fn reset_with(&self, window: &EpisodeWindow, init_temps: &[f64], init_soc: f64) -> Result<EnvState> {
        if window.len() < self.horizon() {
            return Err(Error::SeriesTooShort(format!(
                "window has {} steps, horizon is {}",
                window.len(),
                self.horizon()
            )));
        }
        if init_temps.len() != self.n_buildings() || init_temps.iter().any(|t| !t.is_finite()) {
            return Err(Error::Invalid("need one finite initial temperature per building".into()));
        }
        if !(init_soc >= 0.0 && init_soc <= self.cfg.sess.soc_max) {
            return Err(Error::Invalid(format!(
                "initial state of charge {init_soc} outside [0, {}]",
                self.cfg.sess.soc_max
            )));
        }
        let soc = if self.sess_enabled { init_soc } else { 0.0 };
        Ok(EnvState {
            indoor_temps: init_temps.to_vec(),
            soc,
            k: 0,
            p_bar: self.price(window, 0),
        })
    }

    pub fn project(&self, raw: &JointAction, state: &EnvState) -> JointAction {
        if self.sess_enabled {
            project_actions(raw, state.soc, &self.cfg.sess, &self.cfg.buildings)
        } else {
            let mut a = project_actions(raw, 0.0, &self.cfg.sess, &self.cfg.buildings);
            for b in &mut a.buildings {
                b.p_d = 0.0;
            }
            a.charge = 0.0;
            a
        }
    }

    pub fn step(&self, state: &EnvState, raw: &JointAction, window: &EpisodeWindow) -> Result<StepOutcome> {
        let k = state.k;
        let horizon = self.horizon();
        if k >= horizon {
            return Err(Error::EpisodeFinished { k, horizon });
        }
        if raw.buildings.len() != self.n_buildings() {
            return Err(Error::Dimension(format!(
                "joint action has {} buildings, environment has {}",
                raw.buildings.len(),
                self.n_buildings()
            )));
        }
        let action = self.project(raw, state);
        let price = self.price(window, k);
        let t_out = window.outdoor_temps[k];

        let indoor_next: Vec<f64> = state
            .indoor_temps
            .iter()
            .zip(&action.buildings)
            .zip(&self.deltas)
            .map(|((&t, a), d)| building_step(t, t_out, a.p_d, a.p_g, d))
            .collect();

        let p_d: Vec<f64> = action.buildings.iter().map(|a| a.p_d).collect();
        let (soc_next, discharge) = sess_step(state.soc, action.charge, &p_d, &self.cfg.sess)?;

        let terminal = k + 1 == horizon;
        let p_bar_next = if terminal {
            state.p_bar
        } else {
            PriceAverage {
                p_bar: state.p_bar,
                eta: self.cfg.eta,
            }
            .update(self.price(window, k + 1))
            .p_bar
        };

        let rw = &self.cfg.reward;
        let mut rewards: Vec<f64> = indoor_next
            .iter()
            .zip(&action.buildings)
            .zip(&self.cfg.buildings)
            .map(|((&t, a), b)| building_reward(t, b.t_target, price, a.p_g, rw))
            .collect();
        rewards.push(if self.sess_enabled {
            sess_reward(state.p_bar, price, action.charge, terminal, soc_next, rw)
        } else {
            0.0
        });

        let info = StepInfo {
            price,
            p_bar: state.p_bar,
            t_out,
            grid_cost: action.buildings.iter().map(|a| price * a.p_g.abs() * self.cfg.dt).collect(),
            charge_cost: price * action.charge * self.cfg.dt,
            temp_deviation: indoor_next
                .iter()
                .zip(&self.cfg.buildings)
                .map(|(t, b)| (t - b.t_target).abs())
                .collect(),
            discharge,
        };
        Ok(StepOutcome {
            next_state: EnvState {
                indoor_temps: indoor_next,
                soc: soc_next,
                k: k + 1,
                p_bar: p_bar_next,
            },
            action,
            rewards,
            info,
            terminal,
        })
    }

    fn check_obs(&self, state: &EnvState, window: &EpisodeWindow) -> Result<()> {
        if state.k >= self.horizon() || state.k >= window.len() {
            return Err(Error::EpisodeFinished {
                k: state.k,
                horizon: self.horizon(),
            });
        }
        Ok(())
    }

    /// Normalized `(T_in, T_out, p, soc)` of building `i`; `with_soc = false`
    /// drops the last component.
    pub fn building_observation(
        &self,
        state: &EnvState,
        window: &EpisodeWindow,
        i: usize,
        with_soc: bool,
    ) -> Result<Vec<f64>> {
        self.check_obs(state, window)?;
        let s = &self.cfg.obs_scale;
        let mut o = vec![
            s.normalize(ObsKind::Temperature, state.indoor_temps[i]),
            s.normalize(ObsKind::Temperature, window.outdoor_temps[state.k]),
            s.normalize(ObsKind::Price, self.price(window, state.k)),
        ];
        if with_soc {
            o.push(s.normalize(ObsKind::Soc, state.soc));
        }
        Ok(o)
    }

    /// Normalized `(T_out, p, p_bar, soc)` of the storage agent.
    pub fn sess_observation(&self, state: &EnvState, window: &EpisodeWindow) -> Result<Vec<f64>> {
        self.check_obs(state, window)?;
        let s = &self.cfg.obs_scale;
        Ok(vec![
            s.normalize(ObsKind::Temperature, window.outdoor_temps[state.k]),
            s.normalize(ObsKind::Price, self.price(window, state.k)),
            s.normalize(ObsKind::Price, state.p_bar),
            s.normalize(ObsKind::Soc, state.soc),
        ])
    }

    /// One observation per agent: buildings in order, then the storage agent.
    pub fn observations(&self, state: &EnvState, window: &EpisodeWindow) -> Result<Vec<Vec<f64>>> {
        let mut obs = (0..self.n_buildings())
            .map(|i| self.building_observation(state, window, i, true))
            .collect::<Result<Vec<_>>>()?;
        obs.push(self.sess_observation(state, window)?);
        Ok(obs)
    }

    /// Deduplicated union of all agent observations:
    /// `(T_in_1..T_in_N, T_out, p, p_bar, soc)`.
    pub fn central_observation(&self, state: &EnvState, window: &EpisodeWindow) -> Result<Vec<f64>> {
        self.check_obs(state, window)?;
        let s = &self.cfg.obs_scale;
        let mut o: Vec<f64> = state
            .indoor_temps
            .iter()
            .map(|&t| s.normalize(ObsKind::Temperature, t))
            .collect();
        o.extend(self.sess_observation(state, window)?);
        Ok(o)
    }

    /// Runs a full episode from `reset`, choosing each raw action with
    /// `policy`.
    pub fn rollout<F>(&self, window: &EpisodeWindow, method: &str, mut policy: F) -> Result<EpisodeTrace>
    where
        F: FnMut(&Environment, &EnvState, &EpisodeWindow) -> Result<JointAction>,
    {
        let mut state = self.reset(window)?;
        let mut steps = Vec::with_capacity(self.horizon());
        while state.k < self.horizon() {
            let raw = policy(self, &state, window)?;
            let out = self.step(&state, &raw, window)?;
            steps.push(trace_step(&state, &out));
            state = out.next_state;
        }
        Ok(EpisodeTrace {
            method: method.to_string(),
            case: window.case,
            t_target: self.targets(),
            dt: self.cfg.dt,
            steps,
        })
    }

    /// Constraint violations in a step outcome; empty when feasible.
    pub fn constraint_violations(&self, out: &StepOutcome) -> Vec<String> {
        const TOL: f64 = 1e-9;
        let mut v = Vec::new();
        let sess = &self.cfg.sess;
        for (i, (a, b)) in out.action.buildings.iter().zip(&self.cfg.buildings).enumerate() {
            if a.p_g < b.p_g_min - TOL || a.p_g > b.p_g_max + TOL {
                v.push(format!("building {i}: P_g {} outside box", a.p_g));
            }
            if a.p_d < b.p_d_min - TOL || a.p_d > b.p_d_max + TOL {
                v.push(format!("building {i}: P_d {} outside box", a.p_d));
            }
        }
        for (i, d) in out.info.discharge.iter().enumerate() {
            if *d < 0.0 || *d > sess.d_max_per_building + TOL {
                v.push(format!("building {i}: discharge {d} outside [0, d_max]"));
            }
        }
        if out.action.charge < 0.0 || out.action.charge > sess.c_max + TOL {
            v.push(format!("charge {} outside [0, c_max]", out.action.charge));
        }
        let soc = out.next_state.soc;
        if !(0.0..=sess.soc_max).contains(&soc) {
            v.push(format!("soc {soc} outside [0, soc_max]"));
        }
        if out.rewards.iter().any(|r| !r.is_finite()) {
            v.push("non-finite reward".into());
        }
        v
    }
}

pub(crate) fn trace_step(state: &EnvState, out: &StepOutcome) -> TraceStep {
    let n = out.action.buildings.len();
    TraceStep {
        k: state.k,
        price: out.info.price,
        p_bar: out.info.p_bar,
        t_out: out.info.t_out,
        t_in: state.indoor_temps.clone(),
        t_in_next: out.next_state.indoor_temps.clone(),
        p_g: out.action.buildings.iter().map(|a| a.p_g).collect(),
        p_d: out.action.buildings.iter().map(|a| a.p_d).collect(),
        discharge: out.info.discharge.clone(),
        charge: out.action.charge,
        soc: state.soc,
        soc_next: out.next_state.soc,
        building_rewards: out.rewards[..n].to_vec(),
        sess_reward: out.rewards[n],
    }
}
