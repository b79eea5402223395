//! Downstream evaluation: node classification, link prediction, metrics and
//! 2-D projection.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub mod classify;
pub mod link;
pub mod logistic;
pub mod metrics;
pub mod project;

pub use classify::{node_classification, stratified_split, NcReport, NcRun};
pub use link::{link_prediction, link_prediction_run, link_split, LinkSplit, LpReport, LpRun};
pub use logistic::{fit_binary, FitOptions, LogisticModel, OvrModel};
pub use project::{project_2d, write_projection, Projection};

/// One row of the `task,view,seed,metric,value` CSV. Summary rows leave the
/// seed empty and name the statistic in `metric` (e.g. `micro_f1@0.5:mean`).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub task: String,
    pub view: Option<usize>,
    pub seed: Option<u64>,
    pub metric: String,
    pub value: f64,
}

impl MetricRow {
    pub fn new(task: &str, view: Option<usize>, seed: Option<u64>, metric: impl Into<String>, value: f64) -> Self {
        MetricRow {
            task: task.to_string(),
            view,
            seed,
            metric: metric.into(),
            value,
        }
    }
}

pub fn nc_rows(r: &NcReport) -> Vec<MetricRow> {
    let tag = |m: &str| format!("{m}@{}", r.train_frac);
    let mut rows = Vec::new();
    for run in &r.runs {
        rows.push(MetricRow::new("nc", None, Some(run.seed), tag("micro_f1"), run.micro_f1));
        rows.push(MetricRow::new("nc", None, Some(run.seed), tag("macro_f1"), run.macro_f1));
    }
    for (name, (mean, std)) in [("micro_f1", r.micro_f1), ("macro_f1", r.macro_f1)] {
        rows.push(MetricRow::new("nc", None, None, format!("{}:mean", tag(name)), mean));
        rows.push(MetricRow::new("nc", None, None, format!("{}:std", tag(name)), std));
    }
    rows
}

pub fn lp_rows(r: &LpReport) -> Vec<MetricRow> {
    let v = Some(r.view);
    let mut rows = Vec::new();
    for run in &r.runs {
        rows.push(MetricRow::new("lp", v, Some(run.seed), "auc", run.auc));
        rows.push(MetricRow::new("lp", v, Some(run.seed), "ap", run.ap));
    }
    for (name, (mean, std)) in [("auc", r.auc), ("ap", r.ap)] {
        rows.push(MetricRow::new("lp", v, None, format!("{name}:mean"), mean));
        rows.push(MetricRow::new("lp", v, None, format!("{name}:std"), std));
    }
    rows
}

pub fn format_metrics(rows: &[MetricRow]) -> String {
    let mut s = String::from("task,view,seed,metric,value\n");
    for r in rows {
        let view = r.view.map(|v| v.to_string()).unwrap_or_default();
        let seed = r.seed.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{view},{seed},{},{}", r.task, r.metric, r.value);
    }
    s
}

pub fn write_metrics(path: &Path, rows: &[MetricRow]) -> Result<()> {
    std::fs::write(path, format_metrics(rows)).map_err(|e| Error::io(path, e))
}
