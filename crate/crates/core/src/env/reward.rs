use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub alpha_temp: f64,
    pub alpha_energy: f64,
    /// Penalty per kWh left in storage at the end of an episode.
    pub beta: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            alpha_temp: 10.0,
            alpha_energy: 1.0,
            beta: 0.05,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self, field: &str) -> Result<()> {
        for (name, v) in [
            ("alpha_temp", self.alpha_temp),
            ("alpha_energy", self.alpha_energy),
            ("beta", self.beta),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{field}.{name}"), "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// Negated weighted sum of temperature deviation and grid energy cost.
#[inline]
pub fn building_reward(t_in_next: f64, t_target: f64, price: f64, p_g: f64, cfg: &RewardConfig) -> f64 {
    -(cfg.alpha_temp * (t_in_next - t_target).abs() + cfg.alpha_energy * price * p_g.abs())
}

/// Arbitrage reward `(p_bar - p) * c`; the final step also pays for energy
/// left in storage.
#[inline]
pub fn sess_reward(
    p_bar: f64,
    price: f64,
    charge: f64,
    is_terminal: bool,
    soc_terminal: f64,
    cfg: &RewardConfig,
) -> f64 {
    let r = (p_bar - price) * charge;
    if is_terminal {
        r - cfg.beta * soc_terminal
    } else {
        r
    }
}
