use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{average_precision, mean, ndcg_at_k, precision_at_k, reciprocal_rank};
use super::ttest::{paired_ttest, TTest};
use crate::error::EvalError;
use crate::ltr::{LabelMode, Model, RankingDataset};

pub const REPORT_SCHEMA: &str = "newsrank.report/v1";

/// Metric columns in display order: MAP, P@k…, NDCG@k…, MRR.
pub fn metric_names(ks: &[usize]) -> Vec<String> {
    let mut names = vec!["MAP".to_string()];
    names.extend(ks.iter().map(|k| format!("P@{k}")));
    names.extend(ks.iter().map(|k| format!("NDCG@{k}")));
    names.push("MRR".into());
    names
}

/// Every metric for one ranked list of grades. `MAP` and `MRR` hold the
/// query's average precision and reciprocal rank.
pub fn query_metrics(ranked: &[u8], ks: &[usize]) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    m.insert("MAP".to_string(), average_precision(ranked));
    for &k in ks {
        m.insert(format!("P@{k}"), precision_at_k(ranked, k));
        m.insert(format!("NDCG@{k}"), ndcg_at_k(ranked, k));
    }
    m.insert("MRR".to_string(), reciprocal_rank(ranked));
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryReport {
    pub query_id: String,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema: String,
    pub model_id: String,
    pub model_kind: String,
    pub feature_set: String,
    pub split_id: String,
    pub label_mode: LabelMode,
    pub ks: Vec<usize>,
    pub num_queries: usize,
    pub aggregate: BTreeMap<String, f64>,
    pub per_query: Vec<QueryReport>,
}

impl EvaluationReport {
    pub fn per_query_metric(&self, name: &str) -> Vec<(String, f64)> {
        self.per_query
            .iter()
            .map(|q| (q.query_id.clone(), q.metrics.get(name).copied().unwrap_or(0.0)))
            .collect()
    }
}

/// Ranks every group of `data` with `model` and scores it.
pub fn evaluate(
    model: &Model,
    data: &RankingDataset,
    ks: &[usize],
    feature_set: &str,
    split_id: &str,
) -> EvaluationReport {
    let per_query: Vec<QueryReport> = data
        .groups
        .iter()
        .map(|g| {
            let ranked: Vec<u8> = model.rank_group(g).into_iter().map(|i| g.items[i].grade).collect();
            QueryReport {
                query_id: g.query_id.clone(),
                metrics: query_metrics(&ranked, ks),
            }
        })
        .collect();
    let aggregate = metric_names(ks)
        .into_iter()
        .map(|name| {
            let v: Vec<f64> = per_query.iter().map(|q| q.metrics[&name]).collect();
            (name, mean(&v))
        })
        .collect();
    EvaluationReport {
        schema: REPORT_SCHEMA.to_string(),
        model_id: model.id(),
        model_kind: model.kind().to_string(),
        feature_set: feature_set.to_string(),
        split_id: split_id.to_string(),
        label_mode: data.label_mode,
        ks: ks.to_vec(),
        num_queries: per_query.len(),
        aggregate,
        per_query,
    }
}

/// Paired t-test of `metric` between two reports over their shared queries.
pub fn compare(a: &EvaluationReport, b: &EvaluationReport, metric: &str) -> Result<TTest, EvalError> {
    let bm: HashMap<String, f64> = b.per_query_metric(metric).into_iter().collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = a
        .per_query_metric(metric)
        .into_iter()
        .filter_map(|(q, x)| bm.get(&q).map(|&y| (x, y)))
        .unzip();
    paired_ttest(&xs, &ys)
}

/// Plain-text table, one row per report.
pub fn render_table(reports: &[EvaluationReport]) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    let names = metric_names(&first.ks);
    let mut out = String::new();
    let _ = write!(out, "{:<10} {:<10} {:<10}", "model", "features", "split");
    for n in &names {
        let _ = write!(out, " {n:>8}");
    }
    out.push('\n');
    for r in reports {
        let _ = write!(out, "{:<10} {:<10} {:<10}", r.model_kind, r.feature_set, r.split_id);
        for n in &names {
            match r.aggregate.get(n) {
                Some(v) => {
                    let _ = write!(out, " {v:>8.4}");
                }
                None => {
                    let _ = write!(out, " {:>8}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}
