//! Entity annotations for queries and candidates.
//!
//! Two linkers produce [`EntityAnnotation`]s: a client for a TagMe-compatible
//! HTTP service ([`RemoteLinker`]) that writes through a persistent cache,
//! and a deterministic dictionary linker ([`link_offline`]) for tests and
//! air-gapped runs.

mod cache;
mod offline;
mod remote;

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::ParseError;

pub use cache::EntityCache;
pub use offline::{link_offline, Gazetteer};
pub use remote::{HttpTransport, RemoteLinker, TagMeConfig, Transport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityAnnotation {
    /// Matched span of the input text.
    pub surface: String,
    /// Canonical identifier, e.g. a wiki page title such as `Suicide_attack`.
    pub entity_id: String,
    /// In `[0, 1]`.
    pub confidence: f64,
}

/// Distinct entity ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntitySet(BTreeSet<String>);

impl EntitySet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0.contains(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &String> {
        self.0.iter()
    }

    pub fn intersection_len(&self, other: &EntitySet) -> usize {
        self.0.intersection(&other.0).count()
    }

    pub fn union_len(&self, other: &EntitySet) -> usize {
        self.0.union(&other.0).count()
    }
}

impl<S: Into<String>> FromIterator<S> for EntitySet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        EntitySet(iter.into_iter().map(Into::into).collect())
    }
}

pub fn entity_set(annotations: &[EntityAnnotation]) -> EntitySet {
    annotations.iter().map(|a| a.entity_id.clone()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityOwner {
    Query,
    Candidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EntityRecord {
    kind: EntityOwner,
    id: String,
    entities: EntitySet,
}

/// Entity sets for every linked query and candidate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntityIndex {
    pub queries: HashMap<String, EntitySet>,
    pub candidates: HashMap<String, EntitySet>,
}

impl EntityIndex {
    pub fn insert(&mut self, kind: EntityOwner, id: impl Into<String>, set: EntitySet) {
        match kind {
            EntityOwner::Query => self.queries.insert(id.into(), set),
            EntityOwner::Candidate => self.candidates.insert(id.into(), set),
        };
    }

    /// Unlinked items have no entities.
    pub fn query(&self, id: &str) -> EntitySet {
        self.queries.get(id).cloned().unwrap_or_default()
    }

    pub fn candidate(&self, id: &str) -> EntitySet {
        self.candidates.get(id).cloned().unwrap_or_default()
    }

    /// JSON lines sorted by (kind, id) so output is stable.
    pub fn write<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        let mut records: Vec<EntityRecord> = self
            .queries
            .iter()
            .map(|(id, s)| (EntityOwner::Query, id, s))
            .chain(self.candidates.iter().map(|(id, s)| (EntityOwner::Candidate, id, s)))
            .map(|(kind, id, entities)| EntityRecord {
                kind,
                id: id.clone(),
                entities: entities.clone(),
            })
            .collect();
        records.sort_by(|a, b| (a.kind, &a.id).cmp(&(b.kind, &b.id)));
        for r in records {
            serde_json::to_writer(&mut writer, &r)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, ParseError> {
        let mut index = EntityIndex::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| ParseError::io(idx + 1, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let r: EntityRecord = serde_json::from_str(&line)
                .map_err(|e| ParseError::record(idx + 1, e.to_string()))?;
            index.insert(r.kind, r.id, r.entities);
        }
        Ok(index)
    }
}
