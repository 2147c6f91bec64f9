use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::dataset::{LabelMode, QueryGroup, RankingDataset};
use super::forest::{train_random_forest, ForestParams, RandomForestModel};
use super::lambdamart::{train_lambdamart, LambdaMartModel, LambdaMartParams};
use super::rankboost::{train_rankboost, RankBoostModel, RankBoostParams};
use crate::error::{ModelError, TrainError};
use crate::features::FeatureVector;

pub const MODEL_SCHEMA: &str = "newsrank.model/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rb,
    Lm,
    Rf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [Self::Rb, Self::Lm, Self::Rf];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rb => "rb",
            Self::Lm => "lm",
            Self::Rf => "rf",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rb" | "rankboost" => Ok(Self::Rb),
            "lm" | "lambdamart" => Ok(Self::Lm),
            "rf" | "randomforest" | "random-forest" => Ok(Self::Rf),
            other => Err(format!("unknown model `{other}` (rb, lm, rf)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ranker {
    RankBoost(RankBoostModel),
    LambdaMart(LambdaMartModel),
    RandomForest(RandomForestModel),
}

impl Ranker {
    pub fn kind(&self) -> ModelKind {
        match self {
            Self::RankBoost(_) => ModelKind::Rb,
            Self::LambdaMart(_) => ModelKind::Lm,
            Self::RandomForest(_) => ModelKind::Rf,
        }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        match self {
            Self::RankBoost(m) => m.score(x),
            Self::LambdaMart(m) => m.score(x),
            Self::RandomForest(m) => m.score(x),
        }
    }
}

/// Hyperparameters for all three learners; only the selected one is used.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub rankboost: RankBoostParams,
    pub lambdamart: LambdaMartParams,
    pub forest: ForestParams,
}

/// Per-learner training trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rounds", rename_all = "lowercase")]
pub enum TrainingLog {
    Rb(Vec<super::rankboost::RoundLog>),
    Lm(Vec<super::lambdamart::IterationLog>),
    Rf(super::forest::ForestLog),
}

/// A trained ranker with the feature list it expects.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub feature_names: Vec<String>,
    pub label_mode: LabelMode,
    pub seed: u64,
    pub ranker: Ranker,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema: String,
    kind: ModelKind,
    feature_names: Vec<String>,
    label_mode: LabelMode,
    seed: u64,
    hyperparameters: Value,
    payload: Value,
}

pub fn train(
    kind: ModelKind,
    train_set: &RankingDataset,
    valid_set: &RankingDataset,
    config: &TrainConfig,
    seed: u64,
) -> Result<(Model, TrainingLog), TrainError> {
    if let Err(e) = train_set.validate() {
        return Err(TrainError::Hyperparameter(format!("invalid training data: {e}")));
    }
    if valid_set.feature_names != train_set.feature_names && !valid_set.groups.is_empty() {
        return Err(ModelError::FeatureMismatch("validation features differ from training features".into()).into());
    }
    let (ranker, log) = match kind {
        ModelKind::Rb => {
            let (m, log) = train_rankboost(train_set, &config.rankboost)?;
            (Ranker::RankBoost(m), TrainingLog::Rb(log))
        }
        ModelKind::Lm => {
            let (m, log) = train_lambdamart(train_set, valid_set, &config.lambdamart, seed)?;
            (Ranker::LambdaMart(m), TrainingLog::Lm(log))
        }
        ModelKind::Rf => {
            let (m, log) = train_random_forest(train_set, &config.forest, seed)?;
            (Ranker::RandomForest(m), TrainingLog::Rf(log))
        }
    };
    Ok((
        Model {
            feature_names: train_set.feature_names.clone(),
            label_mode: train_set.label_mode,
            seed,
            ranker,
        },
        log,
    ))
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        self.ranker.kind()
    }

    /// Scores a raw vector laid out in `feature_names` order.
    pub fn score_values(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.feature_names.len() {
            return Err(ModelError::FeatureMismatch(format!(
                "{} values for {} features",
                x.len(),
                self.feature_names.len()
            )));
        }
        Ok(self.ranker.score(x))
    }

    pub fn score(&self, fv: &FeatureVector) -> Result<f64, ModelError> {
        if !fv.names().eq(self.feature_names.iter().map(String::as_str)) {
            return Err(ModelError::FeatureMismatch(format!(
                "expected [{}], got [{}]",
                self.feature_names.join(", "),
                fv.names().collect::<Vec<_>>().join(", ")
            )));
        }
        let x: Vec<f64> = fv.values().collect();
        Ok(self.ranker.score(&x))
    }

    /// Candidate ids by descending score; ties by ascending id.
    pub fn rank(&self, group: &[(String, FeatureVector)]) -> Result<Vec<String>, ModelError> {
        let mut scored = group
            .iter()
            .map(|(id, fv)| Ok((id.as_str(), self.score(fv)?)))
            .collect::<Result<Vec<_>, ModelError>>()?;
        sort_scored(&mut scored);
        Ok(scored.into_iter().map(|(id, _)| id.to_string()).collect())
    }

    /// Item indices of a dataset group in ranked order.
    pub fn rank_group(&self, group: &QueryGroup) -> Vec<usize> {
        let scores: Vec<f64> = group.items.iter().map(|i| self.ranker.score(&i.features)).collect();
        let mut idx: Vec<usize> = (0..group.items.len()).collect();
        idx.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| group.items[a].candidate_id.cmp(&group.items[b].candidate_id))
        });
        idx
    }

    pub fn save<W: Write>(&self, mut writer: W) -> Result<(), ModelError> {
        let (hyperparameters, payload) = match &self.ranker {
            Ranker::RankBoost(m) => split_params(m)?,
            Ranker::LambdaMart(m) => split_params(m)?,
            Ranker::RandomForest(m) => split_params(m)?,
        };
        let file = ModelFile {
            schema: MODEL_SCHEMA.to_string(),
            kind: self.kind(),
            feature_names: self.feature_names.clone(),
            label_mode: self.label_mode,
            seed: self.seed,
            hyperparameters,
            payload,
        };
        serde_json::to_writer_pretty(&mut writer, &file).map_err(|e| ModelError::Corrupt(e.to_string()))?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.save(&mut buf).expect("serializing to memory");
        buf
    }

    /// Short content hash, used to name the model in reports.
    pub fn id(&self) -> String {
        let digest = Sha256::digest(self.to_bytes());
        format!("{}-{}", self.kind(), &hex::encode(digest)[..12])
    }

    pub fn load<R: Read>(mut reader: R) -> Result<Model, ModelError> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        let value: Value = serde_json::from_str(&text).map_err(|e| ModelError::Corrupt(e.to_string()))?;
        match value.get("schema").and_then(Value::as_str) {
            Some(MODEL_SCHEMA) => {}
            Some(other) => {
                return Err(ModelError::Version {
                    found: other.to_string(),
                    expected: MODEL_SCHEMA,
                })
            }
            None => return Err(ModelError::Corrupt("missing `schema`".into())),
        }
        let file: ModelFile = serde_json::from_value(value).map_err(|e| ModelError::Corrupt(e.to_string()))?;
        let ranker = match file.kind {
            ModelKind::Rb => Ranker::RankBoost(join_params(file.hyperparameters, file.payload)?),
            ModelKind::Lm => Ranker::LambdaMart(join_params(file.hyperparameters, file.payload)?),
            ModelKind::Rf => Ranker::RandomForest(join_params(file.hyperparameters, file.payload)?),
        };
        let model = Model {
            feature_names: file.feature_names,
            label_mode: file.label_mode,
            seed: file.seed,
            ranker,
        };
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<(), ModelError> {
        let nf = self.feature_names.len();
        let bad = |m: String| Err(ModelError::Corrupt(m));
        match &self.ranker {
            Ranker::RankBoost(m) => {
                for (i, r) in m.rounds.iter().enumerate() {
                    if r.stump.feature >= nf || !r.alpha.is_finite() || !r.stump.threshold.is_finite() {
                        return bad(format!("round {i} is invalid"));
                    }
                }
            }
            Ranker::LambdaMart(LambdaMartModel { trees, .. }) | Ranker::RandomForest(RandomForestModel { trees, .. }) => {
                for (i, t) in trees.iter().enumerate() {
                    t.validate(nf).or_else(|e| bad(format!("tree {i}: {e}")))?;
                }
            }
        }
        Ok(())
    }
}

fn sort_scored(scored: &mut [(&str, f64)]) {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
}

/// Splits a model's `params` field off its serialized form.
fn split_params<T: Serialize>(model: &T) -> Result<(Value, Value), ModelError> {
    let mut value = serde_json::to_value(model).map_err(|e| ModelError::Corrupt(e.to_string()))?;
    let params = value
        .as_object_mut()
        .and_then(|o| o.remove("params"))
        .ok_or_else(|| ModelError::Corrupt("model has no params".into()))?;
    Ok((params, value))
}

fn join_params<T: for<'de> Deserialize<'de>>(params: Value, payload: Value) -> Result<T, ModelError> {
    let Value::Object(mut payload) = payload else {
        return Err(ModelError::Corrupt("payload is not an object".into()));
    };
    let mut obj = Map::new();
    obj.insert("params".into(), params);
    obj.append(&mut payload);
    serde_json::from_value(Value::Object(obj)).map_err(|e| ModelError::Corrupt(e.to_string()))
}
