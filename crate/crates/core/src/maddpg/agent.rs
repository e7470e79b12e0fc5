use std::ops::Range;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::buffer::Batch;
use super::{AgentSpec, TrainConfig};
use crate::error::{Error, Result};
use crate::nn::{soft_update, Adam, Head, Matrix, MlpParams};

/// Affine map of the joint action vector onto `[-1, 1]` per component, used
/// for critic inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionScale {
    pub mid: Vec<f64>,
    pub half: Vec<f64>,
}

impl ActionScale {
    pub fn from_specs(specs: &[AgentSpec]) -> Self {
        let mut mid = Vec::new();
        let mut half = Vec::new();
        for s in specs {
            for (lo, hi) in s.action_lo.iter().zip(&s.action_hi) {
                mid.push(0.5 * (lo + hi));
                half.push(0.5 * (hi - lo));
            }
        }
        Self { mid, half }
    }

    #[inline]
    pub fn norm(&self, j: usize, a: f64) -> f64 {
        (a - self.mid[j]) / self.half[j]
    }
}

/// Actor, critic, their target copies and optimizers for one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentBundle {
    pub spec: AgentSpec,
    /// Columns of this agent's observation inside the full state.
    pub obs_range: Range<usize>,
    /// Columns of this agent's action inside the joint action.
    pub act_range: Range<usize>,
    pub actor: MlpParams,
    pub critic: MlpParams,
    pub target_actor: MlpParams,
    pub target_critic: MlpParams,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
}

impl AgentBundle {
    pub fn new<R: Rng + ?Sized>(
        spec: AgentSpec,
        obs_range: Range<usize>,
        act_range: Range<usize>,
        critic_input: usize,
        cfg: &TrainConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let mut actor_sizes = vec![spec.obs_dim];
        actor_sizes.extend(&cfg.hidden);
        actor_sizes.push(spec.action_dim());
        let head = Head::Bounded {
            lo: spec.action_lo.clone(),
            hi: spec.action_hi.clone(),
        };
        let actor = MlpParams::init(&actor_sizes, cfg.activation, head, cfg.final_init_scale, rng)?;

        let mut critic_sizes = vec![critic_input];
        critic_sizes.extend(&cfg.hidden);
        critic_sizes.push(1);
        let critic = MlpParams::init(&critic_sizes, cfg.activation, Head::Linear, cfg.final_init_scale, rng)?;

        Ok(Self {
            actor_opt: Adam::new(actor.n_params(), cfg.actor_lr),
            critic_opt: Adam::new(critic.n_params(), cfg.critic_lr),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            spec,
            obs_range,
            act_range,
        })
    }

    /// Deterministic policy output plus Gaussian exploration noise with
    /// standard deviation `noise_scale * half_range`, clamped to the box.
    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], noise_scale: f64, rng: &mut R) -> Result<Vec<f64>> {
        if obs.len() != self.spec.obs_dim {
            return Err(Error::Dimension(format!(
                "{} observes {} values, got {}",
                self.spec.name,
                self.spec.obs_dim,
                obs.len()
            )));
        }
        let mut a = self.actor.predict(obs)?;
        if noise_scale > 0.0 {
            for ((x, lo), hi) in a.iter_mut().zip(&self.spec.action_lo).zip(&self.spec.action_hi) {
                let z: f64 = rng.sample(StandardNormal);
                *x = (*x + noise_scale * 0.5 * (hi - lo) * z).clamp(*lo, *hi);
            }
        }
        Ok(a)
    }
}

/// Builds one bundle per agent with contiguous observation and action slices
/// in agent order.
pub fn build_agents<R: Rng + ?Sized>(
    specs: &[AgentSpec],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<AgentBundle>> {
    let state_dim: usize = specs.iter().map(|s| s.obs_dim).sum();
    let action_dim: usize = specs.iter().map(|s| s.action_dim()).sum();
    let (mut o, mut a) = (0, 0);
    specs
        .iter()
        .map(|s| {
            let obs = o..o + s.obs_dim;
            let act = a..a + s.action_dim();
            o = obs.end;
            a = act.end;
            AgentBundle::new(s.clone(), obs, act, state_dim + action_dim, cfg, rng)
        })
        .collect()
}

fn select_cols(m: &Matrix, cols: &Range<usize>) -> Matrix {
    let mut out = Matrix::zeros(m.rows, cols.len());
    for r in 0..m.rows {
        out.row_mut(r).copy_from_slice(&m.row(r)[cols.clone()]);
    }
    out
}

/// `[state | normalized actions]` per row.
fn critic_input(state: &Matrix, actions: &Matrix, scale: &ActionScale) -> Matrix {
    let (s, a) = (state.cols, actions.cols);
    let mut out = Matrix::zeros(state.rows, s + a);
    for r in 0..state.rows {
        let row = out.row_mut(r);
        row[..s].copy_from_slice(state.row(r));
        for (j, (dst, &x)) in row[s..].iter_mut().zip(actions.row(r)).enumerate() {
            *dst = scale.norm(j, x);
        }
    }
    out
}

/// Regression targets `y = scale_i * r_i + gamma * Q'_i(s', a')` for agent `i`,
/// where every `a'_j` is agent `j`'s target actor applied to its own next
/// observation. Terminal rows use `y = scale_i * r_i`.
pub fn critic_targets(
    batch: &Batch,
    agents: &[AgentBundle],
    i: usize,
    gamma: f64,
    scale: &ActionScale,
) -> Result<Vec<f64>> {
    let agent = &agents[i];
    let rewards: Vec<f64> = (0..batch.len())
        .map(|r| agent.spec.reward_scale * batch.rewards.row(r)[i])
        .collect();
    if gamma == 0.0 {
        return Ok(rewards);
    }
    let mut next_actions = Matrix::zeros(batch.len(), batch.action.cols);
    for ag in agents {
        let (a, _) = ag.target_actor.forward_batch(&select_cols(&batch.next_state, &ag.obs_range))?;
        for r in 0..batch.len() {
            next_actions.row_mut(r)[ag.act_range.clone()].copy_from_slice(a.row(r));
        }
    }
    let (q, _) = agent
        .target_critic
        .forward_batch(&critic_input(&batch.next_state, &next_actions, scale))?;
    Ok(rewards
        .iter()
        .enumerate()
        .map(|(r, &rw)| if batch.terminal[r] { rw } else { rw + gamma * q.data[r] })
        .collect())
}

/// One optimizer step on `mean((Q(s, a) - y)^2)`; returns the pre-step loss.
pub fn critic_update(agent: &mut AgentBundle, batch: &Batch, y: &[f64], scale: &ActionScale) -> Result<f64> {
    let b = batch.len();
    if y.len() != b {
        return Err(Error::Dimension("one target per batch row required".into()));
    }
    let (q, cache) = agent.critic.forward_batch(&critic_input(&batch.state, &batch.action, scale))?;
    let mut loss = 0.0;
    let mut up = Matrix::zeros(b, 1);
    for r in 0..b {
        let e = q.data[r] - y[r];
        loss += e * e;
        up.data[r] = 2.0 * e / b as f64;
    }
    loss /= b as f64;
    if !loss.is_finite() {
        return Err(Error::Divergence(format!("{} critic loss is {loss}", agent.spec.name)));
    }
    let (grads, _) = agent.critic.backward_batch(&cache, &up)?;
    agent.critic_opt.step(&mut agent.critic.theta, &grads)?;
    Ok(loss)
}

/// Policy-gradient step: the agent's action columns are replaced with its
/// current policy output, `-mean(Q)` is backpropagated through the critic
/// into that action and on into the actor. Returns `mean(Q)` before the step.
pub fn actor_update(agent: &mut AgentBundle, batch: &Batch, scale: &ActionScale) -> Result<f64> {
    let (grads, mean_q) = actor_gradient(agent, batch, scale)?;
    agent.actor_opt.step(&mut agent.actor.theta, &grads)?;
    Ok(mean_q)
}

/// Gradient of `-mean(Q_i(s, a))` with respect to the actor parameters, with
/// `a_i = pi_i(s_i)` and the other actions taken from the batch.
pub fn actor_gradient(agent: &AgentBundle, batch: &Batch, scale: &ActionScale) -> Result<(Vec<f64>, f64)> {
    let b = batch.len();
    let (own, actor_cache) = agent.actor.forward_batch(&select_cols(&batch.state, &agent.obs_range))?;
    let mut actions = batch.action.clone();
    for r in 0..b {
        actions.row_mut(r)[agent.act_range.clone()].copy_from_slice(own.row(r));
    }
    let input = critic_input(&batch.state, &actions, scale);
    let (q, critic_cache) = agent.critic.forward_batch(&input)?;
    let mean_q = q.data.iter().sum::<f64>() / b as f64;
    if !mean_q.is_finite() {
        return Err(Error::Divergence(format!("{} critic value is {mean_q}", agent.spec.name)));
    }
    let up = Matrix::from_vec(b, 1, vec![-1.0 / b as f64; b]);
    let (_, dx) = agent.critic.backward_batch(&critic_cache, &up)?;
    let offset = batch.state.cols + agent.act_range.start;
    let mut da = Matrix::zeros(b, agent.act_range.len());
    for r in 0..b {
        for (j, g) in da.row_mut(r).iter_mut().enumerate() {
            *g = dx.row(r)[offset + j] / scale.half[agent.act_range.start + j];
        }
    }
    let (grads, _) = agent.actor.backward_batch(&actor_cache, &da)?;
    Ok((grads, mean_q))
}

pub fn soft_update_targets(agent: &mut AgentBundle, tau: f64) -> Result<()> {
    soft_update(&mut agent.target_actor, &agent.actor, tau)?;
    soft_update(&mut agent.target_critic, &agent.critic, tau)
}
