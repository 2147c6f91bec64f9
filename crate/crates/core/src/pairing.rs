//! Candidate generation: every (query, candidate) with the same publication
//! day and at least one word in common.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{candidate_text_with, CandidateTriple, PredicateSource, QueryEvent};
use crate::error::ParseError;
use crate::textproc::TextOptions;

#[derive(Debug, Clone, Copy)]
pub struct Pair<'a> {
    pub query: &'a QueryEvent,
    pub candidate: &'a CandidateTriple,
}

impl Pair<'_> {
    pub fn key(&self) -> PairKey {
        PairKey {
            query_id: self.query.id.clone(),
            candidate_id: self.candidate.id.clone(),
        }
    }
}

/// One line of the pair dump handed to annotation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey {
    pub query_id: String,
    pub candidate_id: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairingOptions {
    /// Compare Porter stems instead of surface tokens.
    pub stemmed_overlap: bool,
    pub text: TextOptions,
    pub predicate_source: PredicateSource,
}

impl PairingOptions {
    fn terms(&self, text: &str) -> HashSet<String> {
        let tokens = self.text.analyze(text);
        let tokens = if self.stemmed_overlap {
            tokens.stemmed()
        } else {
            tokens
        };
        tokens.into_inner().into_iter().collect()
    }
}

/// All pairs with equal dates and a shared term, sorted by query id then
/// candidate id.
pub fn make_pairs<'a>(
    queries: &'a [QueryEvent],
    candidates: &'a [CandidateTriple],
    options: &PairingOptions,
) -> Vec<Pair<'a>> {
    let mut by_date: BTreeMap<NaiveDate, Vec<(&CandidateTriple, HashSet<String>)>> =
        BTreeMap::new();
    for c in candidates {
        let terms = options.terms(&candidate_text_with(c, options.predicate_source));
        by_date.entry(c.date).or_default().push((c, terms));
    }

    let mut pairs: Vec<Pair<'a>> = queries
        .par_iter()
        .flat_map_iter(|q| {
            let query_terms = options.terms(&q.text);
            by_date
                .get(&q.date)
                .into_iter()
                .flatten()
                .filter(|(_, terms)| !terms.is_disjoint(&query_terms))
                .map(|(c, _)| Pair {
                    query: q,
                    candidate: *c,
                })
                .collect::<Vec<_>>()
        })
        .collect();
    pairs.sort_by(|a, b| {
        (a.query.id.as_str(), a.candidate.id.as_str())
            .cmp(&(b.query.id.as_str(), b.candidate.id.as_str()))
    });
    pairs
}

pub fn write_pair_keys<W: Write>(mut writer: W, pairs: &[PairKey]) -> std::io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut writer, p)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_pair_keys<R: BufRead>(reader: R) -> Result<Vec<PairKey>, ParseError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ParseError::io(idx + 1, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| ParseError::record(idx + 1, e.to_string()))?,
        );
    }
    Ok(out)
}
