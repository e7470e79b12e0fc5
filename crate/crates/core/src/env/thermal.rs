//! First-order RC building model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of one building and its HVAC limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingParams {
    /// Thermal resistance to outdoors, degC/kW.
    pub resistance: f64,
    /// Thermal capacity, kWh/degC.
    pub capacity: f64,
    /// Heat-input weight of power drawn from the shared storage.
    pub w_d: f64,
    /// Heat-input weight of power drawn from the grid.
    pub w_g: f64,
    pub p_g_min: f64,
    pub p_g_max: f64,
    pub p_d_min: f64,
    pub p_d_max: f64,
    /// Preferred indoor temperature, degC.
    pub t_target: f64,
}

impl BuildingParams {
    /// Building 1 of the reference community.
    pub fn reference_1() -> Self {
        Self {
            resistance: 8.0,
            capacity: 15.0,
            w_d: 0.9,
            w_g: 1.1,
            p_g_min: -5.0,
            p_g_max: 5.0,
            p_d_min: -5.0,
            p_d_max: 5.0,
            t_target: 20.0,
        }
    }

    /// Building 2 of the reference community.
    pub fn reference_2() -> Self {
        Self {
            resistance: 6.0,
            capacity: 14.0,
            w_d: 1.0,
            w_g: 1.0,
            ..Self::reference_1()
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        let bad = |name: &str, reason: &str| Err(Error::config(format!("{field}.{name}"), reason));
        if !(self.resistance > 0.0 && self.resistance.is_finite()) {
            return bad("resistance", "must be positive");
        }
        if !(self.capacity > 0.0 && self.capacity.is_finite()) {
            return bad("capacity", "must be positive");
        }
        if !self.w_d.is_finite() || !self.w_g.is_finite() {
            return bad("w_d", "weights must be finite");
        }
        if !(self.p_g_min < self.p_g_max) {
            return bad("p_g_min", "must be below p_g_max");
        }
        if !(self.p_d_min < self.p_d_max) {
            return bad("p_d_min", "must be below p_d_max");
        }
        if !self.t_target.is_finite() {
            return bad("t_target", "must be finite");
        }
        Ok(())
    }
}

/// Coefficients of the discrete-time indoor temperature update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalDeltas {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

/// Forward-Euler discretization of `C dT/dt = (T_out - T)/R + w_d P_d + w_g P_g`.
pub fn discretize(params: &BuildingParams, dt: f64) -> Result<ThermalDeltas> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Invalid(format!("time step must be positive, got {dt}")));
    }
    let ratio = dt / (params.resistance * params.capacity);
    if !(ratio < 1.0) {
        return Err(Error::UnstableDiscretization { ratio });
    }
    Ok(ThermalDeltas {
        d1: 1.0 - ratio,
        d2: dt * params.w_d / params.capacity,
        d3: dt * params.w_g / params.capacity,
        d4: ratio,
    })
}

#[inline]
pub fn building_step(t_in: f64, t_out: f64, p_d: f64, p_g: f64, deltas: &ThermalDeltas) -> f64 {
    deltas.d1 * t_in + deltas.d2 * p_d + deltas.d3 * p_g + deltas.d4 * t_out
}
