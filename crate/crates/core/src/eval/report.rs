use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{cp, MetricsReport};
use crate::error::{Error, Result};
use crate::trace::EpisodeTrace;

/// Aggregate of one method over its evaluation runs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodSummary {
    pub method: String,
    pub runs: usize,
    pub atd: f64,
    pub atd_std: f64,
    pub tec: f64,
    pub tec_std: f64,
    pub cost_buildings: Vec<f64>,
    pub cost_sess: f64,
    pub cost_total_single: f64,
    pub cost_total_single_median: f64,
    pub cost_total_verbatim: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl MethodSummary {
    pub fn from_reports(method: impl Into<String>, reports: &[MetricsReport]) -> Result<Self> {
        if reports.is_empty() {
            return Err(Error::Invalid("method summary needs at least one run".into()));
        }
        let n = reports[0].cost.buildings.len();
        if reports.iter().any(|r| r.cost.buildings.len() != n) {
            return Err(Error::Invalid("runs disagree on the number of buildings".into()));
        }
        let col = |f: &dyn Fn(&MetricsReport) -> f64| reports.iter().map(f).collect::<Vec<f64>>();
        let atd = col(&|r| r.atd);
        let tec = col(&|r| r.tec);
        let total = col(&|r| r.cost.total_single);
        Ok(Self {
            method: method.into(),
            runs: reports.len(),
            atd: mean(&atd),
            atd_std: std_dev(&atd),
            tec: mean(&tec),
            tec_std: std_dev(&tec),
            cost_buildings: (0..n).map(|i| mean(&col(&|r| r.cost.buildings[i]))).collect(),
            cost_sess: mean(&col(&|r| r.cost.sess)),
            cost_total_single: mean(&total),
            cost_total_single_median: median(&total),
            cost_total_verbatim: mean(&col(&|r| r.cost.total_verbatim)),
        })
    }

    pub fn from_traces(method: impl Into<String>, traces: &[EpisodeTrace]) -> Result<Self> {
        let reports = traces.iter().map(MetricsReport::of).collect::<Result<Vec<_>>>()?;
        Self::from_reports(method, &reports)
    }

    /// Summary carrying only the two comfort/energy columns, for
    /// metrics given directly rather than recomputed from traces.
    pub fn from_metrics(method: impl Into<String>, atd: f64, tec: f64) -> Self {
        Self {
            method: method.into(),
            runs: 1,
            atd,
            tec,
            ..Self::default()
        }
    }
}

/// Evaluation output of one method on one case: per-run metrics and their
/// aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub method: String,
    pub case: String,
    #[serde(default)]
    pub runs: Vec<MetricsReport>,
    pub summary: MethodSummary,
}

impl EvaluationRecord {
    pub fn from_traces(method: impl Into<String>, case: impl Into<String>, traces: &[EpisodeTrace]) -> Result<Self> {
        let method = method.into();
        let runs = traces.iter().map(MetricsReport::of).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            summary: MethodSummary::from_reports(method.clone(), &runs)?,
            method,
            case: case.into(),
            runs,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    #[serde(flatten)]
    pub summary: MethodSummary,
    pub cp: f64,
}

/// Method comparison for one case, with composite scores normalized by the
/// column maxima of the compared set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub case: String,
    pub rows: Vec<ReportRow>,
}

pub fn compare(case: impl Into<String>, summaries: Vec<MethodSummary>) -> Result<ComparisonReport> {
    if summaries.is_empty() {
        return Err(Error::Invalid("nothing to compare".into()));
    }
    let atd_max = summaries.iter().map(|s| s.atd).fold(f64::NEG_INFINITY, f64::max);
    let tec_max = summaries.iter().map(|s| s.tec).fold(f64::NEG_INFINITY, f64::max);
    let rows = summaries
        .into_iter()
        .map(|s| {
            Ok(ReportRow {
                cp: cp(s.atd, s.tec, atd_max, tec_max)?,
                summary: s,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport {
        case: case.into(),
        rows,
    })
}

/// Summarizes each method's traces and compares them.
pub fn report(methods: &[(String, Vec<EpisodeTrace>)], case: impl Into<String>) -> Result<ComparisonReport> {
    let summaries = methods
        .iter()
        .map(|(m, t)| MethodSummary::from_traces(m.clone(), t))
        .collect::<Result<Vec<_>>>()?;
    compare(case, summaries)
}

impl ComparisonReport {
    fn n_buildings(&self) -> usize {
        self.rows.iter().map(|r| r.summary.cost_buildings.len()).max().unwrap_or(0)
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["method", "case", "runs", "atd", "tec", "cp"].iter().map(|s| s.to_string()).collect();
        h.extend((1..=self.n_buildings()).map(|i| format!("cost_building_{i}")));
        h.extend(
            ["cost_sess", "cost_total_single_count", "cost_total_single_count_median", "cost_total_verbatim"]
                .iter()
                .map(|s| s.to_string()),
        );
        h
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "case: {}", self.case);
        let width = self.rows.iter().map(|r| r.summary.method.len()).max().unwrap_or(6).max(6);
        let _ = writeln!(
            out,
            "{:<width$}  {:>4}  {:>8}  {:>9}  {:>6}  {:>10}  {:>10}",
            "method", "runs", "ATD", "TEC", "CP", "cost", "cost(verb)"
        );
        for r in &self.rows {
            let s = &r.summary;
            let _ = writeln!(
                out,
                "{:<width$}  {:>4}  {:>8.3}  {:>9.3}  {:>6.3}  {:>10.4}  {:>10.4}",
                s.method, s.runs, s.atd, s.tec, r.cp, s.cost_total_single, s.cost_total_verbatim
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let n = self.n_buildings();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(self.csv_header())?;
        for r in &self.rows {
            let s = &r.summary;
            let mut rec = vec![
                s.method.clone(),
                self.case.clone(),
                s.runs.to_string(),
                s.atd.to_string(),
                s.tec.to_string(),
                r.cp.to_string(),
            ];
            rec.extend((0..n).map(|i| s.cost_buildings.get(i).map_or(String::new(), |c| c.to_string())));
            rec.extend([
                s.cost_sess.to_string(),
                s.cost_total_single.to_string(),
                s.cost_total_single_median.to_string(),
                s.cost_total_verbatim.to_string(),
            ]);
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        crate::nn::write_json(path, self)
    }
}
