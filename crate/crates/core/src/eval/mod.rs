//! Rank metrics, significance testing and evaluation reports.

pub mod metrics;
mod report;
mod ttest;

pub use report::{compare, evaluate, metric_names, query_metrics, render_table, EvaluationReport, QueryReport, REPORT_SCHEMA};
pub use ttest::{paired_ttest, TTest};
