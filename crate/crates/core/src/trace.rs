//! Per-step episode records and their CSV export.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::Case;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub k: usize,
    /// Currency per kWh.
    pub price: f64,
    pub p_bar: f64,
    pub t_out: f64,
    /// Indoor temperatures at the start of the step.
    pub t_in: Vec<f64>,
    /// Indoor temperatures after the step.
    pub t_in_next: Vec<f64>,
    pub p_g: Vec<f64>,
    pub p_d: Vec<f64>,
    /// Realized storage discharge per building.
    pub discharge: Vec<f64>,
    pub charge: f64,
    pub soc: f64,
    pub soc_next: f64,
    pub building_rewards: Vec<f64>,
    pub sess_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub method: String,
    pub case: Case,
    pub t_target: Vec<f64>,
    pub dt: f64,
    pub steps: Vec<TraceStep>,
}

impl EpisodeTrace {
    pub fn n_buildings(&self) -> usize {
        self.t_target.len()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Undiscounted return per agent, buildings first then storage.
    pub fn returns(&self) -> Vec<f64> {
        let n = self.n_buildings();
        let mut out = vec![0.0; n + 1];
        for s in &self.steps {
            for (o, r) in out.iter_mut().zip(&s.building_rewards) {
                *o += r;
            }
            out[n] += s.sess_reward;
        }
        out
    }

    pub fn csv_header(n: usize) -> Vec<String> {
        let mut h: Vec<String> = ["k", "p", "p_bar", "t_out"].iter().map(|s| s.to_string()).collect();
        for i in 1..=n {
            for col in ["t_in", "t_in_next", "p_g", "p_d", "d", "reward"] {
                h.push(format!("{col}_{i}"));
            }
        }
        h.extend(["c", "soc", "soc_next", "sess_reward"].iter().map(|s| s.to_string()));
        h
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Invalid(format!("{other:?}")),
        })?;
        self.write_rows(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn write_rows<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        let n = self.n_buildings();
        w.write_record(Self::csv_header(n))?;
        for s in &self.steps {
            let mut row = vec![
                s.k.to_string(),
                s.price.to_string(),
                s.p_bar.to_string(),
                s.t_out.to_string(),
            ];
            for i in 0..n {
                row.push(s.t_in[i].to_string());
                row.push(s.t_in_next[i].to_string());
                row.push(s.p_g[i].to_string());
                row.push(s.p_d[i].to_string());
                row.push(s.discharge[i].to_string());
                row.push(s.building_rewards[i].to_string());
            }
            row.push(s.charge.to_string());
            row.push(s.soc.to_string());
            row.push(s.soc_next.to_string());
            row.push(s.sess_reward.to_string());
            w.write_record(&row)?;
        }
        Ok(())
    }
}
