//! The joint cost/comfort objective evaluated over a trace.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::EpisodeTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostVariant {
    /// `sum_k sum_i p_k (c_k + P_g) + lambda |T - T_target|`: the charge
    /// term is counted once per building and grid power is signed.
    Verbatim,
    /// Charge paid once per step and grid power counted by magnitude.
    SingleCount,
}

/// Objective contribution of one step. `t_next` are the indoor temperatures
/// reached by the step.
#[inline]
pub fn step_objective(
    price: f64,
    charge: f64,
    p_g: &[f64],
    t_next: &[f64],
    t_target: &[f64],
    lambda: f64,
    variant: CostVariant,
) -> f64 {
    let comfort: f64 = t_next
        .iter()
        .zip(t_target)
        .map(|(t, tt)| lambda * (t - tt).abs())
        .sum();
    let money = match variant {
        CostVariant::Verbatim => p_g.iter().map(|&g| price * (charge + g)).sum::<f64>(),
        CostVariant::SingleCount => price * charge + p_g.iter().map(|g| price * g.abs()).sum::<f64>(),
    };
    money + comfort
}

pub fn objective_cost(trace: &EpisodeTrace, lambda: f64, variant: CostVariant) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let n = trace.n_buildings();
    let mut total = 0.0;
    for s in &trace.steps {
        if s.p_g.len() != n || s.t_in_next.len() != n {
            return Err(Error::Invalid(format!("incomplete trace row at step {}", s.k)));
        }
        total += step_objective(s.price, s.charge, &s.p_g, &s.t_in_next, &trace.t_target, lambda, variant);
    }
    Ok(total)
}
