//! Exhaustive search over a discretized action grid on tiny instances.
//!
//! Every component of the joint action `(P_g_1, P_d_1, .., P_g_N, P_d_N, c)`
//! takes one of the grid levels, and the resulting raw action goes through
//! the ordinary environment projection and dynamics. The searched objective
//! is the single-count cost: money paid for `|P_g|` and `c`, plus `lambda`
//! times the post-step temperature deviation.

use serde::{Deserialize, Serialize};

use crate::env::{step_objective, BuildingAction, CostVariant, EnvState, Environment, JointAction};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::maddpg::Controller;
use crate::timeseries::EpisodeWindow;

pub const NODE_BOUND: u128 = 10_000_000;
pub const MAX_HORIZON: usize = 6;
pub const MAX_LEVELS: usize = 5;

#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub env: Environment,
    pub window: EpisodeWindow,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub cost: f64,
    /// Grid actions in the order they were chosen.
    pub raw_actions: Vec<JointAction>,
    /// The same actions after projection.
    pub applied_actions: Vec<JointAction>,
}

/// Nodes of a full tree with `branching` children per node and `horizon`
/// levels, root excluded.
pub fn node_count(branching: u128, horizon: usize) -> u128 {
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..horizon {
        level = level.saturating_mul(branching);
        total = total.saturating_add(level);
    }
    total
}

impl OracleInstance {
    pub fn new(env: Environment, window: &EpisodeWindow, horizon: usize, grid: Vec<f64>) -> Result<Self> {
        if horizon == 0 || horizon > MAX_HORIZON {
            return Err(Error::Invalid(format!("oracle horizon must lie in 1..={MAX_HORIZON}")));
        }
        if grid.is_empty() || grid.len() > MAX_LEVELS || grid.iter().any(|g| !g.is_finite()) {
            return Err(Error::Invalid(format!(
                "oracle grid needs 1..={MAX_LEVELS} finite levels"
            )));
        }
        if window.len() < horizon {
            return Err(Error::SeriesTooShort(format!(
                "window has {} steps, oracle horizon is {horizon}",
                window.len()
            )));
        }
        let inst = Self {
            env: env.with_horizon(horizon),
            window: window.truncated(horizon),
            grid,
        };
        let nodes = inst.nodes();
        if nodes > NODE_BOUND {
            let b = inst.branching();
            let fit = (1..=MAX_HORIZON).take_while(|&h| node_count(b, h) <= NODE_BOUND).last();
            let hint = match fit {
                Some(h) => format!("use horizon <= {h} with {} levels", inst.grid.len()),
                None => "use fewer grid levels or fewer buildings".to_string(),
            };
            return Err(Error::EnumerationBound {
                nodes,
                bound: NODE_BOUND,
                hint,
            });
        }
        Ok(inst)
    }

    pub fn horizon(&self) -> usize {
        self.env.horizon()
    }

    pub fn action_dim(&self) -> usize {
        2 * self.env.n_buildings() + 1
    }

    /// Joint grid actions per step.
    pub fn branching(&self) -> u128 {
        (self.grid.len() as u128).pow(self.action_dim() as u32)
    }

    pub fn nodes(&self) -> u128 {
        node_count(self.branching(), self.horizon())
    }

    /// Joint action with mixed-radix index `idx`; the first component is the
    /// most significant digit.
    pub fn decode(&self, mut idx: u64) -> JointAction {
        let l = self.grid.len() as u64;
        let dim = self.action_dim();
        let mut v = vec![0.0; dim];
        for slot in v.iter_mut().rev() {
            *slot = self.grid[(idx % l) as usize];
            idx /= l;
        }
        vector_to_action(&v)
    }

    /// Nearest grid level per component; ties go to the lower level.
    pub fn snap(&self, a: &JointAction) -> JointAction {
        let near = |x: f64| {
            let mut best = self.grid[0];
            for &g in &self.grid[1..] {
                if (g - x).abs() < (best - x).abs() || ((g - x).abs() == (best - x).abs() && g < best) {
                    best = g;
                }
            }
            best
        };
        let v: Vec<f64> = action_to_vector(a).into_iter().map(near).collect();
        vector_to_action(&v)
    }

    fn step_cost(&self, state: &EnvState, raw: &JointAction, lambda: f64) -> Result<(f64, EnvState, JointAction)> {
        let out = self.env.step(state, raw, &self.window)?;
        let p_g: Vec<f64> = out.action.buildings.iter().map(|b| b.p_g).collect();
        let c = step_objective(
            out.info.price,
            out.action.charge,
            &p_g,
            &out.next_state.indoor_temps,
            &self.env.targets(),
            lambda,
            CostVariant::SingleCount,
        );
        Ok((c, out.next_state, out.action))
    }
}

pub(crate) fn action_to_vector(a: &JointAction) -> Vec<f64> {
    let mut v: Vec<f64> = a.buildings.iter().flat_map(|b| [b.p_g, b.p_d]).collect();
    v.push(a.charge);
    v
}

fn vector_to_action(v: &[f64]) -> JointAction {
    let n = (v.len() - 1) / 2;
    JointAction {
        buildings: (0..n)
            .map(|i| BuildingAction {
                p_g: v[2 * i],
                p_d: v[2 * i + 1],
            })
            .collect(),
        charge: v[2 * n],
    }
}

struct Best {
    cost: f64,
    path: Vec<u64>,
}

fn dfs(inst: &OracleInstance, state: &EnvState, acc: f64, lambda: f64, path: &mut Vec<u64>, best: &mut Best) -> Result<()> {
    if state.k == inst.horizon() {
        if acc < best.cost {
            best.cost = acc;
            best.path = path.clone();
        }
        return Ok(());
    }
    let b = inst.branching() as u64;
    for idx in 0..b {
        let (c, next, _) = inst.step_cost(state, &inst.decode(idx), lambda)?;
        path.push(idx);
        dfs(inst, &next, acc + c, lambda, path, best)?;
        path.pop();
    }
    Ok(())
}

fn solution(inst: &OracleInstance, cost: f64, path: &[u64], lambda: f64) -> Result<OracleSolution> {
    let mut state = inst.env.reset(&inst.window)?;
    let mut raw_actions = Vec::new();
    let mut applied_actions = Vec::new();
    for &idx in path {
        let raw = inst.decode(idx);
        let (_, next, applied) = inst.step_cost(&state, &raw, lambda)?;
        raw_actions.push(raw);
        applied_actions.push(applied);
        state = next;
    }
    Ok(OracleSolution {
        cost,
        raw_actions,
        applied_actions,
    })
}

/// Minimum-cost grid action sequence by depth-first search over the full
/// tree. Root branches may run in parallel; among equal costs the
/// lexicographically smallest index sequence wins.
pub fn dp_oracle(inst: &OracleInstance, lambda: f64, exec: Execution) -> Result<OracleSolution> {
    let root = inst.env.reset(&inst.window)?;
    let b = inst.branching() as usize;
    let branches = exec.map_range(b, |idx| -> Result<Best> {
        let mut best = Best {
            cost: f64::INFINITY,
            path: Vec::new(),
        };
        let (c, next, _) = inst.step_cost(&root, &inst.decode(idx as u64), lambda)?;
        let mut path = vec![idx as u64];
        dfs(inst, &next, c, lambda, &mut path, &mut best)?;
        Ok(best)
    });
    let mut best = Best {
        cost: f64::INFINITY,
        path: Vec::new(),
    };
    for br in branches {
        let br = br?;
        if br.cost < best.cost {
            best = br;
        }
    }
    if !best.cost.is_finite() {
        return Err(Error::Divergence("oracle found no finite-cost sequence".into()));
    }
    solution(inst, best.cost, &best.path, lambda)
}

/// Cost of `controller` on the instance with each of its raw actions snapped
/// to the grid first.
pub fn snapped_policy_cost(inst: &OracleInstance, controller: &dyn Controller, lambda: f64) -> Result<f64> {
    let mut state = inst.env.reset(&inst.window)?;
    let mut total = 0.0;
    while state.k < inst.horizon() {
        let raw = inst.snap(&controller.act(&inst.env, &state, &inst.window)?);
        let (c, next, _) = inst.step_cost(&state, &raw, lambda)?;
        total += c;
        state = next;
    }
    Ok(total)
}
