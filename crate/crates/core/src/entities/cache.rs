use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::EntityAnnotation;
use crate::error::EntityError;

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    annotations: Vec<EntityAnnotation>,
}

/// Content-addressed annotation cache backed by an append-only JSON-lines log.
///
/// Keys are `sha256(text)@threshold`. The last entry for a key wins on reload.
#[derive(Debug)]
pub struct EntityCache {
    path: Option<PathBuf>,
    entries: Mutex<HashMap<String, Vec<EntityAnnotation>>>,
    log: Mutex<Option<File>>,
}

impl EntityCache {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            entries: Mutex::new(HashMap::new()),
            log: Mutex::new(None),
        }
    }

    /// Opens (creating if needed) a cache log. A torn final line, left by an
    /// interrupted write, is ignored; corruption anywhere else is an error.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, EntityError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        let mut torn_at = None;
        if path.exists() {
            let content = std::fs::read_to_string(&path)?;
            let mut offset = 0;
            for (i, line) in content.split_inclusive('\n').enumerate() {
                let start = offset;
                offset += line.len();
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheEntry>(line) {
                    Ok(e) => {
                        entries.insert(e.key, e.annotations);
                    }
                    Err(_) if offset == content.len() && !line.ends_with('\n') => {
                        log::warn!("dropping torn last line in {}", path.display());
                        torn_at = Some(start as u64);
                    }
                    Err(e) => {
                        return Err(EntityError::Cache(std::io::Error::new(
                            std::io::ErrorKind::InvalidData,
                            format!("{} line {}: {e}", path.display(), i + 1),
                        )))
                    }
                }
            }
        }
        if let Some(len) = torn_at {
            OpenOptions::new().write(true).open(&path)?.set_len(len)?;
        }
        let log = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            path: Some(path),
            entries: Mutex::new(entries),
            log: Mutex::new(Some(log)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn key(text: &str, threshold: f64) -> String {
        let digest = Sha256::digest(text.as_bytes());
        format!("{}@{threshold:?}", hex::encode(digest))
    }

    pub fn get(&self, key: &str) -> Option<Vec<EntityAnnotation>> {
        self.entries.lock().expect("cache lock").get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records an entry, appending it to the log before it becomes visible.
    pub fn put(&self, key: String, annotations: Vec<EntityAnnotation>) -> Result<(), EntityError> {
        let mut log = self.log.lock().expect("cache log lock");
        if let Some(file) = log.as_mut() {
            let entry = CacheEntry {
                key: key.clone(),
                annotations,
            };
            let mut line = serde_json::to_vec(&entry).map_err(std::io::Error::from)?;
            line.push(b'\n');
            file.write_all(&line)?;
            file.flush()?;
            self.entries
                .lock()
                .expect("cache lock")
                .insert(key, entry.annotations);
        } else {
            self.entries.lock().expect("cache lock").insert(key, annotations);
        }
        Ok(())
    }
}
