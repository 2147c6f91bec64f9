//! Artifact paths, atomic writes and per-step manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::CliError;

pub const MANIFEST_SCHEMA: &str = "newsrank.manifest/v1";

pub mod schema {
    pub const QUERIES: &str = "newsrank.queries/v1";
    pub const CANDIDATES: &str = "newsrank.candidates/v1";
    pub const GAZETTEER: &str = "newsrank.gazetteer/v1";
    pub const JUDGMENTS: &str = "newsrank.judgments/v1";
    pub const PAIRS: &str = "newsrank.pairs/v1";
    pub const ENTITIES: &str = "newsrank.entities/v1";
    pub const GOLD: &str = "newsrank.gold/v1";
    pub const LABEL_SUMMARY: &str = "newsrank.label-summary/v1";
    pub const TRAINING_LOG: &str = "newsrank.training-log/v1";
    pub const TUNE: &str = "newsrank.tune/v1";
    pub const RANKINGS: &str = "newsrank.rankings/v1";
    pub const TABLE: &str = "newsrank.table/v1";
    pub use newsrank::eval::REPORT_SCHEMA as REPORT;
    pub use newsrank::features::FEATURE_SCHEMA as FEATURES;
    pub use newsrank::ltr::MODEL_SCHEMA as MODEL;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub sha256: String,
    pub schema: String,
}

/// Record of one step: enough to replay it and to check its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, OutputEntry>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        write(&mut w)?;
        w.flush()?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        Ok::<_, anyhow::Error>(())
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e.context(format!("writing {}", path.display())));
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))
}

/// A run rooted at the work directory. Tracks what the current step reads
/// and writes so it can leave a manifest behind.
pub struct Run<'a> {
    pub root: PathBuf,
    pub config: &'a Config,
    command: String,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, OutputEntry>,
}

impl<'a> Run<'a> {
    pub fn new(root: &Path, config: &'a Config, command: impl Into<String>) -> Self {
        Self {
            root: root.to_path_buf(),
            config,
            command: command.into(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.root.join(rel)
    }

    fn rel(&self, path: &Path) -> String {
        path.strip_prefix(&self.root)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/")
    }

    /// Opens an input, recording its hash. The producing step's manifest,
    /// when present, must declare the schema this step expects.
    pub fn input(&mut self, path: &Path, expected_schema: &str, hint: &str) -> Result<BufReader<fs::File>> {
        if !path.is_file() {
            return Err(CliError::MissingArtifact {
                path: path.to_path_buf(),
                hint: hint.to_string(),
            }
            .into());
        }
        let rel = self.rel(path);
        if let Some(found) = declared_schema(&self.root, &rel)? {
            if found != expected_schema {
                return Err(CliError::Schema(format!(
                    "{rel} was written as `{found}`, expected `{expected_schema}`"
                ))
                .into());
            }
        }
        self.inputs.insert(rel, sha256_file(path)?);
        Ok(BufReader::new(fs::File::open(path)?))
    }

    pub fn output(
        &mut self,
        path: &Path,
        schema: &str,
        write: impl FnOnce(&mut dyn Write) -> Result<()>,
    ) -> Result<()> {
        write_atomic(path, write)?;
        let rel = self.rel(path);
        self.outputs.insert(
            rel,
            OutputEntry {
                sha256: sha256_file(path)?,
                schema: schema.to_string(),
            },
        );
        Ok(())
    }

    /// Writes `manifests/<name>.json`.
    pub fn finish(self, name: &str) -> Result<Manifest> {
        let manifest = Manifest {
            schema: MANIFEST_SCHEMA.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command,
            seed: self.config.seed,
            config_sha256: self.config.hash(),
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let path = self.root.join("manifests").join(format!("{name}.json"));
        write_atomic(&path, |w| {
            serde_json::to_writer_pretty(&mut *w, &manifest)?;
            w.write_all(b"\n")?;
            Ok(())
        })?;
        Ok(manifest)
    }
}

/// The schema a manifest in `root/manifests` declares for `rel`, if any.
pub fn declared_schema(root: &Path, rel: &str) -> Result<Option<String>> {
    let dir = root.join("manifests");
    let Ok(entries) = fs::read_dir(&dir) else {
        return Ok(None);
    };
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    for p in paths {
        let text = fs::read_to_string(&p)?;
        let Ok(m) = serde_json::from_str::<Manifest>(&text) else {
            continue;
        };
        if let Some(entry) = m.outputs.get(rel) {
            return Ok(Some(entry.schema.clone()));
        }
    }
    Ok(None)
}
