//! Comfort, energy and cost metrics, method comparisons and the small-instance
//! optimality oracle.

mod metrics;
pub mod oracle;
mod report;

pub use metrics::{atd, cheap_charge_fraction, cp, monetary_cost, tec, MetricsReport, MonetaryCost};
pub use oracle::{dp_oracle, snapped_policy_cost, OracleInstance, OracleSolution};
pub use report::{compare, median, report, ComparisonReport, EvaluationRecord, MethodSummary, ReportRow};
