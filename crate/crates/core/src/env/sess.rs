//! Shared energy storage: joint action feasibility and state-of-charge update.

use serde::{Deserialize, Serialize};

use super::thermal::BuildingParams;
use crate::error::{Error, Result};

/// Slack allowed before a capacity constraint triggers rescaling. Keeps the
/// projection idempotent under floating-point roundoff.
pub(crate) const FEAS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessParams {
    /// Capacity, kWh.
    pub soc_max: f64,
    /// Maximum charging power, kW.
    pub c_max: f64,
    /// Maximum discharge towards each building, kW.
    pub d_max_per_building: f64,
    /// Charging efficiency.
    pub delta_c: f64,
    /// Discharge term: a building receiving `P_d` draws `|P_d| / delta_d`.
    pub delta_d: f64,
}

impl Default for SessParams {
    fn default() -> Self {
        Self {
            soc_max: 10.0,
            c_max: 5.0,
            d_max_per_building: 5.0,
            delta_c: 0.9,
            delta_d: 1.1,
        }
    }
}

impl SessParams {
    pub fn validate(&self, field: &str) -> Result<()> {
        let bad = |name: &str, reason: &str| Err(Error::config(format!("{field}.{name}"), reason));
        if !(self.soc_max > 0.0 && self.soc_max.is_finite()) {
            return bad("soc_max", "must be positive");
        }
        if !(self.c_max > 0.0 && self.c_max.is_finite()) {
            return bad("c_max", "must be positive");
        }
        if !(self.d_max_per_building > 0.0 && self.d_max_per_building.is_finite()) {
            return bad("d_max_per_building", "must be positive");
        }
        if !(self.delta_c > 0.0 && self.delta_c <= 1.0) {
            return bad("delta_c", "must lie in (0, 1]");
        }
        if !(self.delta_d >= 1.0 && self.delta_d.is_finite()) {
            return bad("delta_d", "must be >= 1");
        }
        Ok(())
    }

    #[inline]
    pub fn discharge_of(&self, p_d: f64) -> f64 {
        p_d.abs() / self.delta_d
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildingAction {
    /// Grid power, kW (positive heats, negative cools).
    pub p_g: f64,
    /// Power sourced from the shared storage, kW.
    pub p_d: f64,
}

/// Decisions of every agent for one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointAction {
    pub buildings: Vec<BuildingAction>,
    /// Storage charging power, kW.
    pub charge: f64,
}

impl JointAction {
    pub fn zeros(n: usize) -> Self {
        Self {
            buildings: vec![BuildingAction::default(); n],
            charge: 0.0,
        }
    }
}

/// Maps any joint action onto the feasible set.
///
/// 1. Box-clamp every power and the charge rate, and shrink `|P_d|` so each
///    discharge stays within its per-building limit.
/// 2. If the discharges exceed what the storage holds after charging, scale
///    every `P_d` by one common factor.
/// 3. If the storage would overflow, reduce the charge rate.
pub fn project_actions(
    raw: &JointAction,
    soc: f64,
    sess: &SessParams,
    buildings: &[BuildingParams],
) -> JointAction {
    debug_assert_eq!(raw.buildings.len(), buildings.len());
    let d_cap = sess.delta_d * sess.d_max_per_building;
    let mut out = JointAction {
        buildings: raw
            .buildings
            .iter()
            .zip(buildings)
            .map(|(a, b)| BuildingAction {
                p_g: clamp_finite(a.p_g, b.p_g_min, b.p_g_max),
                p_d: clamp_finite(a.p_d, b.p_d_min, b.p_d_max).clamp(-d_cap, d_cap),
            })
            .collect(),
        charge: clamp_finite(raw.charge, 0.0, sess.c_max),
    };

    let total_d: f64 = out.buildings.iter().map(|a| sess.discharge_of(a.p_d)).sum();
    let available = soc + sess.delta_c * out.charge;
    if total_d > available + FEAS_EPS {
        let factor = available.max(0.0) / total_d;
        for a in &mut out.buildings {
            a.p_d *= factor;
        }
    }

    let total_d: f64 = out.buildings.iter().map(|a| sess.discharge_of(a.p_d)).sum();
    if soc + sess.delta_c * out.charge - total_d > sess.soc_max + FEAS_EPS {
        out.charge = ((sess.soc_max - soc + total_d) / sess.delta_c).clamp(0.0, sess.c_max);
    }
    out
}

fn clamp_finite(x: f64, lo: f64, hi: f64) -> f64 {
    if x.is_nan() {
        0.0_f64.clamp(lo, hi)
    } else {
        x.clamp(lo, hi)
    }
}

/// Advances the state of charge for an already feasible action.
///
/// Returns the next state of charge and the realized discharge per building.
pub fn sess_step(soc: f64, charge: f64, p_d: &[f64], sess: &SessParams) -> Result<(f64, Vec<f64>)> {
    let d: Vec<f64> = p_d.iter().map(|&p| sess.discharge_of(p)).collect();
    if charge < -FEAS_EPS || charge > sess.c_max + FEAS_EPS {
        return Err(Error::Infeasible(format!("charge {charge} outside [0, {}]", sess.c_max)));
    }
    if let Some(&bad) = d.iter().find(|&&x| x > sess.d_max_per_building + 1e-9) {
        return Err(Error::Infeasible(format!(
            "discharge {bad} exceeds per-building limit {}",
            sess.d_max_per_building
        )));
    }
    let next = soc + sess.delta_c * charge - d.iter().sum::<f64>();
    if next < -1e-9 || next > sess.soc_max + 1e-9 {
        return Err(Error::Infeasible(format!(
            "state of charge would become {next} (capacity {})",
            sess.soc_max
        )));
    }
    Ok((next.clamp(0.0, sess.soc_max), d))
}
