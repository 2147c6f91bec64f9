use std::path::{Path, PathBuf};

use clap::ValueEnum;
use newsrank::entities::TagMeConfig;
use newsrank::features::{FeatureConfig, FeatureSetName};
use newsrank::labels::SplitConfig;
use newsrank::ltr::{ModelKind, TrainConfig, TuneGrid};
use newsrank::pairing::PairingOptions;
use newsrank::synth::NewsConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EntityMode {
    Remote,
    Offline,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    /// Action labels (or codes) whose candidates are dropped at ingest.
    pub ban_actions: Vec<String>,
    /// Optional `code<TAB>label` table used to validate predicate codes.
    pub action_codes: Option<PathBuf>,
}

impl Default for CorpusSection {
    fn default() -> Self {
        Self {
            ban_actions: vec!["Make statement".into()],
            action_codes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntitySection {
    pub gazetteer: Option<PathBuf>,
    /// Annotation cache for the remote linker, relative to the work directory.
    pub cache: PathBuf,
    pub tagme: TagMeConfig,
}

impl Default for EntitySection {
    fn default() -> Self {
        Self {
            gazetteer: None,
            cache: PathBuf::from("cache/tagme.jsonl"),
            tagme: TagMeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelSection {
    pub min_judgments: usize,
}

impl Default for LabelSection {
    fn default() -> Self {
        Self { min_judgments: 3 }
    }
}

/// Everything a run depends on besides its input files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub feature_set: FeatureSetName,
    pub model: ModelKind,
    pub entity_mode: EntityMode,
    pub metric_k: Vec<usize>,
    pub corpus: CorpusSection,
    pub pairing: PairingOptions,
    pub features: FeatureConfig,
    pub entities: EntitySection,
    pub labels: LabelSection,
    pub split: SplitConfig,
    pub train: TrainConfig,
    pub tune: TuneGrid,
    pub synth: NewsConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 42,
            feature_set: FeatureSetName::All,
            model: ModelKind::Rf,
            entity_mode: EntityMode::Offline,
            metric_k: vec![5, 10],
            corpus: CorpusSection::default(),
            pairing: PairingOptions::default(),
            features: FeatureConfig::default(),
            entities: EntitySection::default(),
            labels: LabelSection::default(),
            split: SplitConfig::default(),
            train: TrainConfig::default(),
            tune: TuneGrid::default(),
            synth: NewsConfig::default(),
        }
    }
}

impl Config {
    /// Reads a TOML or JSON config, chosen by extension.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|_| CliError::MissingArtifact {
            path: path.to_path_buf(),
            hint: "config file".into(),
        })?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: &str| Err(CliError::Config(m.to_string()));
        if self.metric_k.is_empty() || self.metric_k.contains(&0) {
            return fail("metric_k must list positive cutoffs");
        }
        let bm = self.features.bm25;
        if !(bm.k1 >= 0.0 && bm.k1.is_finite()) || !(0.0..=1.0).contains(&bm.b) {
            return fail("features.bm25 needs k1 >= 0 and b in [0, 1]");
        }
        if self.labels.min_judgments == 0 {
            return fail("labels.min_judgments must be positive");
        }
        if self.split.train_days == 0 || self.split.test_days == 0 {
            return fail("split.train_days and split.test_days must be positive");
        }
        if !(0.0..=1.0).contains(&self.entities.tagme.threshold) {
            return fail("entities.tagme.threshold must be in [0, 1]");
        }
        if self.entities.tagme.concurrency == 0 {
            return fail("entities.tagme.concurrency must be positive");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_overrides_and_defaults() {
        let c: Config = toml::from_str(
            r#"
            seed = 7
            feature_set = "sel"
            [features.bm25]
            k1 = 0.9
            [train.forest]
            num_trees = 5
            "#,
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.feature_set, FeatureSetName::Sel);
        assert_eq!(c.features.bm25.k1, 0.9);
        assert_eq!(c.features.bm25.b, 0.75);
        assert_eq!(c.train.forest.num_trees, 5);
        assert_eq!(c.metric_k, [5, 10]);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(toml::from_str::<Config>("sede = 1").is_err());
        let c = Config {
            metric_k: vec![0],
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_ignores_the_service_token() {
        let mut a = Config::default();
        let h = a.hash();
        a.entities.tagme.token = "secret".into();
        assert_eq!(a.hash(), h);
        a.seed += 1;
        assert_ne!(a.hash(), h);
    }
}
