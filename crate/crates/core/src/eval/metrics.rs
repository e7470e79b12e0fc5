use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::EpisodeTrace;

fn nonempty(trace: &EpisodeTrace) -> Result<()> {
    if trace.is_empty() {
        Err(Error::EmptyTrace)
    } else {
        Ok(())
    }
}

/// Mean absolute deviation of the post-step indoor temperature from target
/// over all buildings and steps.
pub fn atd(trace: &EpisodeTrace) -> Result<f64> {
    nonempty(trace)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for s in &trace.steps {
        for (t, tt) in s.t_in_next.iter().zip(&trace.t_target) {
            sum += (t - tt).abs();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyTrace);
    }
    Ok(sum / count as f64)
}

/// Energy volume `sum_k sum_i (|P_g| + d)`.
pub fn tec(trace: &EpisodeTrace) -> Result<f64> {
    nonempty(trace)?;
    Ok(trace
        .steps
        .iter()
        .map(|s| s.p_g.iter().map(|g| g.abs()).sum::<f64>() + s.discharge.iter().sum::<f64>())
        .sum())
}

/// `0.5 atd / atd_max + 0.5 tec / tec_max`.
pub fn cp(atd: f64, tec: f64, atd_max: f64, tec_max: f64) -> Result<f64> {
    if !(atd_max > 0.0 && tec_max > 0.0) {
        return Err(Error::Invalid(format!(
            "composite score needs positive maxima, got atd_max={atd_max}, tec_max={tec_max}"
        )));
    }
    Ok(0.5 * atd / atd_max + 0.5 * tec / tec_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonetaryCost {
    /// `sum_k p_k |P_g| dt` per building.
    pub buildings: Vec<f64>,
    /// `sum_k p_k c_k dt`.
    pub sess: f64,
    /// Buildings plus storage, each charged unit paid once.
    pub total_single: f64,
    /// `sum_k sum_i p_k (c_k + P_g) dt`, charge counted per building and grid
    /// power signed.
    pub total_verbatim: f64,
}

pub fn monetary_cost(trace: &EpisodeTrace) -> MonetaryCost {
    let n = trace.n_buildings();
    let mut buildings = vec![0.0; n];
    let mut sess = 0.0;
    let mut verbatim = 0.0;
    for s in &trace.steps {
        for (b, g) in buildings.iter_mut().zip(&s.p_g) {
            *b += s.price * g.abs() * trace.dt;
            verbatim += s.price * (s.charge + g) * trace.dt;
        }
        sess += s.price * s.charge * trace.dt;
    }
    MonetaryCost {
        total_single: buildings.iter().sum::<f64>() + sess,
        buildings,
        sess,
        total_verbatim: verbatim,
    }
}

/// Share of charged energy bought while the price is below its running
/// average; `None` when the storage never charges.
pub fn cheap_charge_fraction(trace: &EpisodeTrace) -> Option<f64> {
    let total: f64 = trace.steps.iter().map(|s| s.charge).sum();
    if total <= 0.0 {
        return None;
    }
    let cheap: f64 = trace.steps.iter().filter(|s| s.price < s.p_bar).map(|s| s.charge).sum();
    Some(cheap / total)
}

/// Per-trace metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub case: String,
    pub atd: f64,
    pub tec: f64,
    pub cost: MonetaryCost,
    /// Buildings first, storage last.
    pub returns: Vec<f64>,
    pub cheap_charge_fraction: Option<f64>,
}

impl MetricsReport {
    pub fn of(trace: &EpisodeTrace) -> Result<Self> {
        Ok(Self {
            method: trace.method.clone(),
            case: trace.case.to_string(),
            atd: atd(trace)?,
            tec: tec(trace)?,
            cost: monetary_cost(trace),
            returns: trace.returns(),
            cheap_charge_fraction: cheap_charge_fraction(trace),
        })
    }
}
