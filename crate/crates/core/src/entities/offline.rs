use std::collections::HashMap;
use std::io::BufRead;

use super::EntityAnnotation;
use crate::error::EntityError;
use crate::textproc::{token_spans, tokenize};

/// Surface form → entity id dictionary, keyed by token sequence.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: HashMap<Vec<String>, String>,
    longest: usize,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry. Re-adding a surface form with a different id is an
    /// error, so lookups never depend on insertion order.
    pub fn insert(&mut self, surface: &str, entity_id: &str) -> Result<(), String> {
        let key = tokenize(surface).into_inner();
        if key.is_empty() {
            return Err(format!("surface form `{surface}` has no tokens"));
        }
        if entity_id.trim().is_empty() {
            return Err(format!("empty entity id for `{surface}`"));
        }
        match self.entries.get(&key) {
            Some(existing) if existing != entity_id => {
                return Err(format!(
                    "surface form `{surface}` maps to both `{existing}` and `{entity_id}`"
                ));
            }
            _ => {}
        }
        self.longest = self.longest.max(key.len());
        self.entries.insert(key, entity_id.trim().to_string());
        Ok(())
    }

    /// Reads `surface<TAB>entity_id` lines; blank lines and `#` comments are skipped.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, EntityError> {
        let mut g = Gazetteer::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| EntityError::Gazetteer {
                line: idx + 1,
                message,
            };
            let (surface, id) = line
                .split_once('\t')
                .ok_or_else(|| err("expected `surface<TAB>entity_id`".into()))?;
            g.insert(surface, id).map_err(err)?;
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entity_ids(&self) -> impl Iterator<Item = &String> {
        self.entries.values()
    }
}

impl<'a> FromIterator<(&'a str, &'a str)> for Gazetteer {
    /// Panics on conflicting entries; use [`Gazetteer::insert`] for fallible construction.
    fn from_iter<I: IntoIterator<Item = (&'a str, &'a str)>>(iter: I) -> Self {
        let mut g = Gazetteer::new();
        for (s, id) in iter {
            g.insert(s, id).expect("valid gazetteer entry");
        }
        g
    }
}

/// Greedy longest-match-first scan over the lowercased tokens of `text`.
/// Matches never overlap and all carry confidence 1.0.
pub fn link_offline(text: &str, gazetteer: &Gazetteer) -> Vec<EntityAnnotation> {
    if gazetteer.is_empty() {
        return Vec::new();
    }
    let spans = token_spans(text);
    let tokens: Vec<String> = spans
        .iter()
        .map(|&(s, e)| tokenize(&text[s..e]).join(""))
        .collect();

    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let max = gazetteer.longest.min(tokens.len() - i);
        let hit = (1..=max).rev().find_map(|len| {
            gazetteer
                .entries
                .get(&tokens[i..i + len])
                .map(|id| (len, id))
        });
        match hit {
            Some((len, id)) => {
                out.push(EntityAnnotation {
                    surface: text[spans[i].0..spans[i + len - 1].1].to_string(),
                    entity_id: id.clone(),
                    confidence: 1.0,
                });
                i += len;
            }
            None => i += 1,
        }
    }
    out
}
