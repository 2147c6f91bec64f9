//! Crowd judgments: majority-vote gold labels, agreement, query filtering,
//! binary relabeling and the chronological train/validation/test split.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::RelevanceLabel;
use crate::error::LabelError;
use crate::ltr::{LabelMode, RankingDataset};
use crate::pairing::PairKey;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub query_id: String,
    pub candidate_id: String,
    pub annotator_id: String,
    pub grade: u8,
}

impl Judgment {
    pub fn key(&self) -> PairKey {
        PairKey {
            query_id: self.query_id.clone(),
            candidate_id: self.candidate_id.clone(),
        }
    }
}

/// Reads `query_id,candidate_id,annotator_id,grade` CSV with a header row.
pub fn read_judgments<R: Read>(reader: R) -> Result<Vec<Judgment>, LabelError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<Judgment>().enumerate() {
        // Line 1 is the header.
        let line = i + 2;
        let j = rec.map_err(|e| LabelError::Record {
            line,
            message: e.to_string(),
        })?;
        if j.grade > 2 {
            return Err(LabelError::Record {
                line,
                message: format!("grade {} not in {{0,1,2}}", j.grade),
            });
        }
        out.push(j);
    }
    Ok(out)
}

pub fn write_judgments<W: Write>(writer: W, judgments: &[Judgment]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for j in judgments {
        w.serialize(j)?;
    }
    w.flush()?;
    Ok(())
}

/// The most frequent grade; ties go to the lowest tied grade.
pub fn majority(grades: &[u8]) -> Option<u8> {
    let mut counts = [0usize; 256];
    for &g in grades {
        counts[g as usize] += 1;
    }
    let best = *counts.iter().max()?;
    if best == 0 {
        return None;
    }
    counts.iter().position(|&c| c == best).map(|g| g as u8)
}

/// Gold labels per pair, plus pairs with too few judgments to label.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldLabels {
    pub labels: BTreeMap<PairKey, RelevanceLabel>,
    pub unlabeled: Vec<PairKey>,
}

impl GoldLabels {
    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for l in self.labels.values() {
            c[l.grade() as usize] += 1;
        }
        c
    }

    /// CSV `query_id,candidate_id,label`, sorted by pair.
    pub fn write<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["query_id", "candidate_id", "label"])?;
        for (k, l) in &self.labels {
            w.write_record([k.query_id.as_str(), k.candidate_id.as_str(), &l.grade().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Self, LabelError> {
        #[derive(Deserialize)]
        struct Row {
            query_id: String,
            candidate_id: String,
            label: RelevanceLabel,
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut gold = GoldLabels::default();
        for (i, rec) in rdr.deserialize::<Row>().enumerate() {
            let r = rec.map_err(|e| LabelError::Record {
                line: i + 2,
                message: e.to_string(),
            })?;
            gold.labels.insert(
                PairKey {
                    query_id: r.query_id,
                    candidate_id: r.candidate_id,
                },
                r.label,
            );
        }
        Ok(gold)
    }
}

fn by_pair(judgments: &[Judgment]) -> BTreeMap<PairKey, Vec<u8>> {
    let mut m: BTreeMap<PairKey, Vec<u8>> = BTreeMap::new();
    for j in judgments {
        m.entry(j.key()).or_default().push(j.grade);
    }
    m
}

/// Majority vote per pair. Pairs with fewer than `min_judgments` judgments
/// are reported as unlabeled.
pub fn aggregate(judgments: &[Judgment], min_judgments: usize) -> GoldLabels {
    let mut gold = GoldLabels::default();
    for (key, grades) in by_pair(judgments) {
        match majority(&grades).and_then(RelevanceLabel::from_grade) {
            Some(label) if grades.len() >= min_judgments => {
                gold.labels.insert(key, label);
            }
            _ => gold.unlabeled.push(key),
        }
    }
    gold
}

/// Mean over pairs of the share of judgments equal to the pair's majority
/// grade, as a percentage. Pairs with a single judgment are skipped.
pub fn agreement(judgments: &[Judgment]) -> Result<f64, LabelError> {
    let shares: Vec<f64> = by_pair(judgments)
        .into_values()
        .filter(|g| g.len() >= 2)
        .map(|g| {
            let m = majority(&g).expect("non-empty");
            g.iter().filter(|&&x| x == m).count() as f64 / g.len() as f64
        })
        .collect();
    if shares.is_empty() {
        return Err(LabelError::Empty);
    }
    Ok(100.0 * shares.iter().sum::<f64>() / shares.len() as f64)
}

/// Drops query groups without any item graded above 0.
pub fn filter_queries(mut data: RankingDataset) -> RankingDataset {
    data.groups.retain(|g| g.items.iter().any(|i| i.grade > 0));
    data
}

/// Removes R pairs and relabels VR as 1. Already-binary data is returned
/// unchanged. Groups left empty are dropped.
pub fn binary_mode(mut data: RankingDataset) -> RankingDataset {
    if data.label_mode == LabelMode::Binary {
        return data;
    }
    for g in &mut data.groups {
        g.items.retain(|i| i.grade != 1);
        for i in &mut g.items {
            i.grade = (i.grade == 2) as u8;
        }
    }
    data.groups.retain(|g| !g.items.is_empty());
    data.label_mode = LabelMode::Binary;
    data
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub train_days: usize,
    pub valid_days: usize,
    pub test_days: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_days: 10,
            valid_days: 2,
            test_days: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Valid,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [Self::Train, Self::Valid, Self::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Valid => "valid",
            Self::Test => "test",
        }
    }
}

/// Calendar assignment of days to splits: the first `train_days` distinct
/// days train, the next `valid_days` validate, and every later day tests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateSplit {
    pub train: Vec<NaiveDate>,
    pub valid: Vec<NaiveDate>,
    pub test: Vec<NaiveDate>,
}

impl DateSplit {
    pub fn new(dates: impl IntoIterator<Item = NaiveDate>, config: &SplitConfig) -> Result<Self, LabelError> {
        let days: Vec<NaiveDate> = dates.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let needed = config.train_days + config.valid_days + config.test_days;
        if days.len() < needed || config.test_days == 0 {
            return Err(LabelError::InsufficientDates {
                needed: needed.max(1),
                found: days.len(),
            });
        }
        let (train, rest) = days.split_at(config.train_days);
        let (valid, test) = rest.split_at(config.valid_days);
        Ok(Self {
            train: train.to_vec(),
            valid: valid.to_vec(),
            test: test.to_vec(),
        })
    }

    pub fn assign(&self, date: NaiveDate) -> Option<SplitName> {
        if self.train.contains(&date) {
            Some(SplitName::Train)
        } else if self.valid.contains(&date) {
            Some(SplitName::Valid)
        } else if self.test.contains(&date) {
            Some(SplitName::Test)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub dates: DateSplit,
    pub train: RankingDataset,
    pub valid: RankingDataset,
    pub test: RankingDataset,
}

/// Partitions groups by query date.
pub fn split_by_date(data: &RankingDataset, config: &SplitConfig) -> Result<Splits, LabelError> {
    let dates = DateSplit::new(data.groups.iter().map(|g| g.date), config)?;
    let empty = || RankingDataset::empty(data.feature_names.clone(), data.label_mode);
    let mut splits = Splits {
        train: empty(),
        valid: empty(),
        test: empty(),
        dates,
    };
    for g in &data.groups {
        let target = match splits.dates.assign(g.date).expect("every group date is assigned") {
            SplitName::Train => &mut splits.train,
            SplitName::Valid => &mut splits.valid,
            SplitName::Test => &mut splits.test,
        };
        target.groups.push(g.clone());
    }
    Ok(splits)
}
