use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::RelevanceLabel;
use crate::error::FeatureError;
use crate::features::{FeatureVector, FeaturizedPair};

/// How grades are to be read: 0/1/2 (NR/R/VR), or 0/1 (NR/VR) once
/// R pairs have been removed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    #[default]
    Graded,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub candidate_id: String,
    pub features: Vec<f64>,
    pub grade: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryGroup {
    pub query_id: String,
    pub date: NaiveDate,
    pub items: Vec<RankedItem>,
}

impl QueryGroup {
    pub fn grades(&self) -> Vec<u8> {
        self.items.iter().map(|i| i.grade).collect()
    }

    /// Ordered pairs `(i, j)` with `grade_i > grade_j`.
    pub fn crucial_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.items.len();
        (0..n).flat_map(move |i| {
            (0..n).filter_map(move |j| (self.items[i].grade > self.items[j].grade).then_some((i, j)))
        })
    }
}

/// Query groups of feature vectors sharing one canonical feature list.
/// Groups are sorted by query id and items by candidate id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingDataset {
    pub feature_names: Vec<String>,
    pub label_mode: LabelMode,
    pub groups: Vec<QueryGroup>,
}

impl RankingDataset {
    pub fn new(feature_names: Vec<String>, label_mode: LabelMode, mut groups: Vec<QueryGroup>) -> Self {
        groups.sort_by(|a, b| a.query_id.cmp(&b.query_id));
        for g in &mut groups {
            g.items.sort_by(|a, b| a.candidate_id.cmp(&b.candidate_id));
        }
        Self {
            feature_names,
            label_mode,
            groups,
        }
    }

    pub fn empty(feature_names: Vec<String>, label_mode: LabelMode) -> Self {
        Self::new(feature_names, label_mode, Vec::new())
    }

    /// Builds groups from labeled pairs, keeping the named features in the
    /// given order. Every pair must carry a label.
    pub fn from_featurized(pairs: &[FeaturizedPair], feature_names: &[&str]) -> Result<Self, FeatureError> {
        Self::collect(pairs, feature_names, |p| {
            p.label.map(RelevanceLabel::grade).ok_or_else(|| FeatureError::Unlabeled {
                query_id: p.query_id.clone(),
                candidate_id: p.candidate_id.clone(),
            })
        })
    }

    /// As [`from_featurized`](Self::from_featurized), with unlabeled pairs
    /// given grade 0; for scoring only.
    pub fn for_ranking(pairs: &[FeaturizedPair], feature_names: &[&str]) -> Result<Self, FeatureError> {
        Self::collect(pairs, feature_names, |p| Ok(p.label.map_or(0, RelevanceLabel::grade)))
    }

    fn collect(
        pairs: &[FeaturizedPair],
        feature_names: &[&str],
        grade: impl Fn(&FeaturizedPair) -> Result<u8, FeatureError>,
    ) -> Result<Self, FeatureError> {
        let mut groups: BTreeMap<&str, QueryGroup> = BTreeMap::new();
        for p in pairs {
            let features = feature_names
                .iter()
                .map(|n| p.features.get(n).ok_or_else(|| FeatureError::UnknownFeature(n.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            let group = groups.entry(&p.query_id).or_insert_with(|| QueryGroup {
                query_id: p.query_id.clone(),
                date: p.date,
                items: Vec::new(),
            });
            group.items.push(RankedItem {
                candidate_id: p.candidate_id.clone(),
                features,
                grade: grade(p)?,
            });
        }
        Ok(Self::new(
            feature_names.iter().map(|s| s.to_string()).collect(),
            LabelMode::Graded,
            groups.into_values().collect(),
        ))
    }

    /// Back to labeled pairs. Binary grades are written as NR/VR.
    pub fn to_featurized(&self) -> Vec<FeaturizedPair> {
        let mut out = Vec::with_capacity(self.num_items());
        for g in &self.groups {
            for item in &g.items {
                let label = match (self.label_mode, item.grade) {
                    (LabelMode::Binary, 1) => RelevanceLabel::VeryRelevant,
                    (_, grade) => RelevanceLabel::from_grade(grade).unwrap_or(RelevanceLabel::NotRelevant),
                };
                let values = self
                    .feature_names
                    .iter()
                    .cloned()
                    .zip(item.features.iter().copied())
                    .collect();
                out.push(FeaturizedPair {
                    query_id: g.query_id.clone(),
                    candidate_id: item.candidate_id.clone(),
                    date: g.date,
                    label: Some(label),
                    features: FeatureVector::new(values).expect("dataset features are valid"),
                });
            }
        }
        out
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn num_items(&self) -> usize {
        self.groups.iter().map(|g| g.items.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.num_items() == 0
    }

    pub fn crucial_pair_count(&self) -> usize {
        self.groups.iter().map(|g| g.crucial_pairs().count()).sum()
    }

    pub fn max_grade(&self) -> u8 {
        match self.label_mode {
            LabelMode::Graded => 2,
            LabelMode::Binary => 1,
        }
    }

    /// Checks vector widths, grade range and finiteness.
    pub fn validate(&self) -> Result<(), String> {
        for g in &self.groups {
            for item in &g.items {
                if item.features.len() != self.feature_names.len() {
                    return Err(format!(
                        "{}/{}: {} features, expected {}",
                        g.query_id,
                        item.candidate_id,
                        item.features.len(),
                        self.feature_names.len()
                    ));
                }
                if item.grade > self.max_grade() {
                    return Err(format!("{}/{}: grade {} out of range", g.query_id, item.candidate_id, item.grade));
                }
                if item.features.iter().any(|v| !v.is_finite()) {
                    return Err(format!("{}/{}: non-finite feature", g.query_id, item.candidate_id));
                }
            }
        }
        Ok(())
    }
}
