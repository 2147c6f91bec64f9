//! Pair features: component sizes, lexical retrieval scores, element match
//! (EM) scores and entity overlap, assembled into named feature sets.
//!
//! Every lexical feature comes in a `_raw` variant over surface tokens and a
//! `_stem` variant over Porter stems. The candidate is scored as the
//! document and the query as the query.
//!
//! Canonical feature order ([`ALL_FEATURES`]), schema [`FEATURE_SCHEMA`]:
//!
//! | name | meaning |
//! |------|---------|
//! | `bm25_{raw,stem}` | Okapi BM25 of the candidate text for the query |
//! | `tfidf_{raw,stem}` | Σ over query terms of count × smoothed idf |
//! | `tf_{raw,stem}` | Σ over query terms of count in the candidate |
//! | `size_query`, `size_candidate` | number of raw tokens |
//! | `em_{subject,predicate,object,location,description}_{raw,stem}` | element match |
//! | `em_date` | 1 when the publication days agree |
//! | `em_spo_{raw,stem}` | EM against subject ∪ predicate ∪ object tokens |
//! | `em_city_country_{raw,stem}` | EM against city ∪ country tokens |
//! | `missing_description`, `missing_location` | 1 when the element is empty |
//! | `entity_common`, `entity_jaccard` | shared linked entities and their Jaccard |

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::{candidate_text_with, CandidateTriple, PredicateSource, RelevanceLabel};
use crate::entities::{EntityIndex, EntitySet};
use crate::error::{FeatureError, ParseError};
use crate::pairing::Pair;
use crate::textproc::{build_stats, CorpusStats, TextOptions, TokenList};

/// Version tag of the feature list below; bump when names or order change.
pub const FEATURE_SCHEMA: &str = "newsrank.features/v1";

pub const ALL_FEATURES: &[&str] = &[
    "bm25_raw",
    "bm25_stem",
    "tfidf_raw",
    "tfidf_stem",
    "tf_raw",
    "tf_stem",
    "size_query",
    "size_candidate",
    "em_subject_raw",
    "em_subject_stem",
    "em_predicate_raw",
    "em_predicate_stem",
    "em_object_raw",
    "em_object_stem",
    "em_location_raw",
    "em_location_stem",
    "em_description_raw",
    "em_description_stem",
    "em_date",
    "em_spo_raw",
    "em_spo_stem",
    "em_city_country_raw",
    "em_city_country_stem",
    "missing_description",
    "missing_location",
    "entity_common",
    "entity_jaccard",
];

const ENTITY_FEATURES: &[&str] = &["entity_common", "entity_jaccard"];

const BASELINE_FEATURES: &[&str] = &["bm25_raw", "bm25_stem", "tfidf_raw", "tfidf_stem"];

const SELECTED_FEATURES: &[&str] = &[
    "bm25_raw",
    "bm25_stem",
    "tfidf_raw",
    "tfidf_stem",
    "em_subject_raw",
    "em_subject_stem",
    "em_predicate_raw",
    "em_predicate_stem",
    "em_object_raw",
    "em_object_stem",
    "em_location_raw",
    "em_location_stem",
    "entity_common",
    "entity_jaccard",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSetName {
    All,
    AllMinus,
    Sel,
    B,
}

impl FeatureSetName {
    pub const ALL_SETS: [FeatureSetName; 4] = [Self::All, Self::AllMinus, Self::Sel, Self::B];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::All => "all",
            Self::AllMinus => "all-minus",
            Self::Sel => "sel",
            Self::B => "b",
        }
    }

    /// Members in canonical order.
    pub fn members(self) -> Vec<&'static str> {
        ALL_FEATURES
            .iter()
            .copied()
            .filter(|f| match self {
                Self::All => true,
                Self::AllMinus => !ENTITY_FEATURES.contains(f),
                Self::Sel => SELECTED_FEATURES.contains(f),
                Self::B => BASELINE_FEATURES.contains(f),
            })
            .collect()
    }

    pub fn needs_entities(self) -> bool {
        self.members().iter().any(|f| ENTITY_FEATURES.contains(f))
    }
}

impl fmt::Display for FeatureSetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSetName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(Self::All),
            "all-minus" | "allminus" | "all_minus" => Ok(Self::AllMinus),
            "sel" => Ok(Self::Sel),
            "b" => Ok(Self::B),
            other => Err(format!("unknown feature set `{other}` (all, all-minus, sel, b)")),
        }
    }
}

/// Named feature values in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<(String, f64)>,
}

impl FeatureVector {
    pub fn new(values: Vec<(String, f64)>) -> Result<Self, FeatureError> {
        let mut seen = HashSet::new();
        for (name, v) in &values {
            if !seen.insert(name.as_str()) {
                return Err(FeatureError::UnknownFeature(format!("duplicate `{name}`")));
            }
            if !v.is_finite() {
                return Err(FeatureError::NonFinite {
                    name: name.clone(),
                    value: *v,
                });
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.iter().map(|(n, _)| n.as_str())
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|(_, v)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(n, v)| (n.as_str(), *v))
    }

    /// Restricts to `set`, in that set's canonical order.
    pub fn select(&self, set: FeatureSetName) -> Result<FeatureVector, FeatureError> {
        let values = set
            .members()
            .into_iter()
            .map(|name| {
                self.get(name)
                    .map(|v| (name.to_string(), v))
                    .ok_or_else(|| FeatureError::UnknownFeature(name.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(FeatureVector { values })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

fn distinct(tokens: &[String]) -> Vec<&str> {
    let mut seen = HashSet::new();
    tokens
        .iter()
        .map(String::as_str)
        .filter(|t| seen.insert(*t))
        .collect()
}

fn counts(doc: &[String]) -> HashMap<&str, usize> {
    let mut m = HashMap::new();
    for t in doc {
        *m.entry(t.as_str()).or_insert(0) += 1;
    }
    m
}

/// Σ over distinct query terms of the term's count in `doc`.
pub fn tf(query: &[String], doc: &[String]) -> f64 {
    let c = counts(doc);
    distinct(query)
        .into_iter()
        .map(|t| c.get(t).copied().unwrap_or(0) as f64)
        .sum()
}

/// Smoothed inverse document frequency, `ln((N + 1) / (df + 1)) + 1`.
pub fn tfidf_idf(stats: &CorpusStats, term: &str) -> f64 {
    let n = stats.doc_count as f64;
    ((n + 1.0) / (stats.df(term) as f64 + 1.0)).ln() + 1.0
}

/// Σ over distinct query terms of count × [`tfidf_idf`].
pub fn tfidf(query: &[String], doc: &[String], stats: &CorpusStats) -> Result<f64, FeatureError> {
    if stats.doc_count == 0 {
        return Err(FeatureError::EmptyCorpus);
    }
    let c = counts(doc);
    Ok(distinct(query)
        .into_iter()
        .map(|t| c.get(t).copied().unwrap_or(0) as f64 * tfidf_idf(stats, t))
        .sum())
}

/// BM25 idf, `ln((N − df + 0.5) / (df + 0.5) + 1)`; always positive.
pub fn bm25_idf(stats: &CorpusStats, term: &str) -> f64 {
    let n = stats.doc_count as f64;
    let df = stats.df(term) as f64;
    ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
}

/// Okapi BM25 of `doc` for the distinct terms of `query`.
pub fn bm25(
    query: &[String],
    doc: &[String],
    stats: &CorpusStats,
    params: Bm25Params,
) -> Result<f64, FeatureError> {
    if stats.doc_count == 0 {
        return Err(FeatureError::EmptyCorpus);
    }
    let c = counts(doc);
    let len_norm = if stats.avg_doc_len > 0.0 {
        doc.len() as f64 / stats.avg_doc_len
    } else {
        0.0
    };
    let k = params.k1 * (1.0 - params.b + params.b * len_norm);
    Ok(distinct(query)
        .into_iter()
        .map(|t| {
            let f = c.get(t).copied().unwrap_or(0) as f64;
            if f == 0.0 {
                0.0
            } else {
                bm25_idf(stats, t) * f * (params.k1 + 1.0) / (f + k)
            }
        })
        .sum())
}

/// Element match: the share of the element's distinct terms that also occur
/// in the query. `None` for an empty element.
pub fn em<S: AsRef<str>>(query_terms: &HashSet<S>, element: &[String]) -> Option<f64>
where
    S: std::hash::Hash + Eq + std::borrow::Borrow<str>,
{
    let element: HashSet<&str> = element.iter().map(String::as_str).collect();
    if element.is_empty() {
        return None;
    }
    let hits = element.iter().filter(|t| query_terms.contains(**t)).count();
    Some(hits as f64 / element.len() as f64)
}

/// (shared entity count, Jaccard similarity); Jaccard is 0 when both sets are empty.
pub fn entity_features(query: &EntitySet, candidate: &EntitySet) -> (f64, f64) {
    let common = query.intersection_len(candidate);
    let union = query.union_len(candidate);
    let jaccard = if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    };
    (common as f64, jaccard)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub bm25: Bm25Params,
    pub text: TextOptions,
    pub predicate_source: PredicateSource,
}

/// Raw and stemmed token lists for one piece of text.
struct Analyzed {
    raw: TokenList,
    stem: TokenList,
}

impl Analyzed {
    fn new(text: &str, options: &TextOptions) -> Self {
        let raw = options.analyze(text);
        let stem = raw.stemmed();
        Self { raw, stem }
    }
}

struct PartitionStats {
    raw: CorpusStats,
    stem: CorpusStats,
}

/// Computes feature vectors for pairs. IDF statistics are built per
/// publication day over the candidate texts of that day.
pub struct Featurizer<'a> {
    config: FeatureConfig,
    stats: HashMap<NaiveDate, PartitionStats>,
    entities: Option<&'a EntityIndex>,
}

impl<'a> Featurizer<'a> {
    pub fn new(
        candidates: &[CandidateTriple],
        config: FeatureConfig,
        entities: Option<&'a EntityIndex>,
    ) -> Self {
        let mut docs: HashMap<NaiveDate, Vec<Analyzed>> = HashMap::new();
        for c in candidates {
            docs.entry(c.date).or_default().push(Analyzed::new(
                &candidate_text_with(c, config.predicate_source),
                &config.text,
            ));
        }
        let stats = docs
            .into_iter()
            .map(|(date, docs)| {
                let raw = build_stats(docs.iter().map(|d| &d.raw));
                let stem = build_stats(docs.iter().map(|d| &d.stem));
                (date, PartitionStats { raw, stem })
            })
            .collect();
        Self {
            config,
            stats,
            entities,
        }
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    /// The pair's vector restricted to `set`.
    pub fn assemble(&self, pair: &Pair<'_>, set: FeatureSetName) -> Result<FeatureVector, FeatureError> {
        if set.needs_entities() && self.entities.is_none() {
            return Err(FeatureError::MissingEntities(set.as_str()));
        }
        let all = self.compute(pair)?;
        all.select(set)
    }

    /// Every feature this featurizer can compute: [`ALL_FEATURES`] when entity
    /// annotations are available, otherwise the `all-minus` members.
    pub fn compute(&self, pair: &Pair<'_>) -> Result<FeatureVector, FeatureError> {
        let q = pair.query;
        let c = pair.candidate;
        let opts = &self.config.text;
        let stats = self
            .stats
            .get(&c.date)
            .ok_or(FeatureError::MissingPartition(c.date))?;

        let query = Analyzed::new(&q.text, opts);
        let doc = Analyzed::new(&candidate_text_with(c, self.config.predicate_source), opts);
        let q_raw: HashSet<&str> = query.raw.iter().map(String::as_str).collect();
        let q_stem: HashSet<&str> = query.stem.iter().map(String::as_str).collect();

        let mut out: Vec<(String, f64)> = Vec::with_capacity(ALL_FEATURES.len());
        let mut push = |name: &str, v: f64| out.push((name.to_string(), v));

        let bm25_params = self.config.bm25;
        push("bm25_raw", bm25(&query.raw, &doc.raw, &stats.raw, bm25_params)?);
        push("bm25_stem", bm25(&query.stem, &doc.stem, &stats.stem, bm25_params)?);
        push("tfidf_raw", tfidf(&query.raw, &doc.raw, &stats.raw)?);
        push("tfidf_stem", tfidf(&query.stem, &doc.stem, &stats.stem)?);
        push("tf_raw", tf(&query.raw, &doc.raw));
        push("tf_stem", tf(&query.stem, &doc.stem));
        push("size_query", query.raw.len() as f64);
        push("size_candidate", doc.raw.len() as f64);

        let location = format!("{} {}", c.city, c.country);
        let spo = format!(
            "{} {} {}",
            c.subject,
            c.predicate_text(self.config.predicate_source),
            c.object
        );
        let em_of = |text: &str| {
            let el = Analyzed::new(text, opts);
            (em(&q_raw, &el.raw), em(&q_stem, &el.stem))
        };
        let mut missing = [false; 2];
        let elements = [
            ("subject", c.subject.as_str()),
            ("predicate", c.predicate_text(self.config.predicate_source)),
            ("object", c.object.as_str()),
            ("location", location.as_str()),
            ("description", c.predicate_description.as_str()),
        ];
        for (name, text) in elements {
            let (raw, stem) = em_of(text);
            match name {
                "description" => missing[0] = raw.is_none(),
                "location" => missing[1] = raw.is_none(),
                _ => {}
            }
            push(&format!("em_{name}_raw"), raw.unwrap_or(0.0));
            push(&format!("em_{name}_stem"), stem.unwrap_or(0.0));
        }
        push("em_date", if q.date == c.date { 1.0 } else { 0.0 });
        for (name, text) in [("spo", spo.as_str()), ("city_country", location.as_str())] {
            let (raw, stem) = em_of(text);
            push(&format!("em_{name}_raw"), raw.unwrap_or(0.0));
            push(&format!("em_{name}_stem"), stem.unwrap_or(0.0));
        }
        push("missing_description", missing[0] as u8 as f64);
        push("missing_location", missing[1] as u8 as f64);

        if let Some(entities) = self.entities {
            let (common, jaccard) = entity_features(&entities.query(&q.id), &entities.candidate(&c.id));
            push("entity_common", common);
            push("entity_jaccard", jaccard);
        }
        FeatureVector::new(out)
    }
}

/// A pair with its features and, once annotated, its gold label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturizedPair {
    pub query_id: String,
    pub candidate_id: String,
    pub date: NaiveDate,
    pub label: Option<RelevanceLabel>,
    pub features: FeatureVector,
}

#[derive(Serialize, Deserialize)]
struct FeaturizedRecord {
    query_id: String,
    candidate_id: String,
    date: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<RelevanceLabel>,
    features: BTreeMap<String, f64>,
}

/// One JSON object per line; feature maps are written with sorted keys.
pub fn write_featurized<W: Write>(mut writer: W, pairs: &[FeaturizedPair]) -> std::io::Result<()> {
    for p in pairs {
        let record = FeaturizedRecord {
            query_id: p.query_id.clone(),
            candidate_id: p.candidate_id.clone(),
            date: p.date,
            label: p.label,
            features: p.features.iter().map(|(n, v)| (n.to_string(), v)).collect(),
        };
        serde_json::to_writer(&mut writer, &record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads featurized pairs, ordering each vector canonically.
pub fn read_featurized<R: BufRead>(reader: R) -> Result<Vec<FeaturizedPair>, ParseError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| ParseError::io(lineno, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: FeaturizedRecord =
            serde_json::from_str(&line).map_err(|e| ParseError::record(lineno, e.to_string()))?;
        if let Some(unknown) = r.features.keys().find(|k| !ALL_FEATURES.contains(&k.as_str())) {
            return Err(ParseError::record(lineno, format!("unknown feature `{unknown}`")));
        }
        let values = ALL_FEATURES
            .iter()
            .filter_map(|name| r.features.get(*name).map(|v| (name.to_string(), *v)))
            .collect();
        let features =
            FeatureVector::new(values).map_err(|e| ParseError::record(lineno, e.to_string()))?;
        out.push(FeaturizedPair {
            query_id: r.query_id,
            candidate_id: r.candidate_id,
            date: r.date,
            label: r.label,
            features,
        });
    }
    Ok(out)
}
