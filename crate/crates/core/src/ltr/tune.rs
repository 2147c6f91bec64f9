//! Grid search scored by mean validation NDCG@10.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::dataset::RankingDataset;
use super::forest::ForestParams;
use super::lambdamart::{mean_ndcg, LambdaMartParams, LAMBDA_CUTOFF};
use super::model::{train, Model, ModelKind, TrainConfig, TrainingLog};
use super::rankboost::RankBoostParams;
use crate::error::TrainError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankBoostGrid {
    pub rounds: Vec<usize>,
}

impl Default for RankBoostGrid {
    fn default() -> Self {
        Self {
            rounds: vec![50, 100, 200, 300],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LambdaMartGrid {
    pub num_trees: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub max_leaves: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
}

impl Default for LambdaMartGrid {
    fn default() -> Self {
        Self {
            num_trees: vec![300],
            learning_rate: vec![0.05, 0.1, 0.2],
            max_leaves: vec![5, 10, 20],
            min_samples_leaf: vec![1, 10],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestGrid {
    pub num_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub feature_subsample: Vec<f64>,
}

impl Default for ForestGrid {
    fn default() -> Self {
        Self {
            num_trees: vec![100],
            max_depth: vec![6, 10, 16],
            feature_subsample: vec![0.33, 0.6, 1.0],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneGrid {
    pub rankboost: RankBoostGrid,
    pub lambdamart: LambdaMartGrid,
    pub forest: ForestGrid,
}

impl TuneGrid {
    /// Every setting for `kind`, each applied on top of `base`.
    pub fn settings(&self, kind: ModelKind, base: &TrainConfig) -> Vec<TrainConfig> {
        let mut out = Vec::new();
        match kind {
            ModelKind::Rb => {
                for &rounds in &self.rankboost.rounds {
                    out.push(TrainConfig {
                        rankboost: RankBoostParams { rounds },
                        ..*base
                    });
                }
            }
            ModelKind::Lm => {
                let g = &self.lambdamart;
                for &num_trees in &g.num_trees {
                    for &learning_rate in &g.learning_rate {
                        for &max_leaves in &g.max_leaves {
                            for &min_samples_leaf in &g.min_samples_leaf {
                                out.push(TrainConfig {
                                    lambdamart: LambdaMartParams {
                                        num_trees,
                                        learning_rate,
                                        max_leaves,
                                        min_samples_leaf,
                                        ..base.lambdamart
                                    },
                                    ..*base
                                });
                            }
                        }
                    }
                }
            }
            ModelKind::Rf => {
                let g = &self.forest;
                for &num_trees in &g.num_trees {
                    for &max_depth in &g.max_depth {
                        for &feature_subsample in &g.feature_subsample {
                            out.push(TrainConfig {
                                forest: ForestParams {
                                    num_trees,
                                    max_depth,
                                    feature_subsample,
                                    ..base.forest
                                },
                                ..*base
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRow {
    /// The learner's hyperparameters for this setting.
    pub setting: Value,
    pub valid_ndcg10: f64,
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub rows: Vec<TuneRow>,
    pub best: usize,
    pub config: TrainConfig,
    pub model: Model,
    pub log: TrainingLog,
}

pub fn validation_ndcg(model: &Model, valid: &RankingDataset) -> f64 {
    let scores: Vec<f64> = valid
        .groups
        .iter()
        .flat_map(|g| g.items.iter().map(|i| model.ranker.score(&i.features)))
        .collect();
    mean_ndcg(&valid.groups, &scores, LAMBDA_CUTOFF)
}

fn params_value(kind: ModelKind, c: &TrainConfig) -> Value {
    match kind {
        ModelKind::Rb => serde_json::to_value(c.rankboost),
        ModelKind::Lm => serde_json::to_value(c.lambdamart),
        ModelKind::Rf => serde_json::to_value(c.forest),
    }
    .expect("params serialize")
}

/// Trains every grid setting in order and keeps the one with the highest
/// validation NDCG@10; the earliest wins ties.
pub fn tune(
    kind: ModelKind,
    train_set: &RankingDataset,
    valid_set: &RankingDataset,
    base: &TrainConfig,
    grid: &TuneGrid,
    seed: u64,
) -> Result<TuneOutcome, TrainError> {
    let settings = grid.settings(kind, base);
    if settings.is_empty() {
        return Err(TrainError::Hyperparameter(format!("empty tuning grid for {kind}")));
    }
    let mut rows = Vec::with_capacity(settings.len());
    let mut best: Option<(usize, f64, Model, TrainingLog)> = None;
    for (i, config) in settings.iter().enumerate() {
        let (model, log) = train(kind, train_set, valid_set, config, seed)?;
        let score = validation_ndcg(&model, valid_set);
        log::info!("tune {kind} setting {}/{}: valid NDCG@10 = {score:.4}", i + 1, settings.len());
        rows.push(TuneRow {
            setting: params_value(kind, config),
            valid_ndcg10: score,
        });
        if best.as_ref().is_none_or(|b| score > b.1) {
            best = Some((i, score, model, log));
        }
    }
    let (best, _, model, log) = best.expect("grid is non-empty");
    Ok(TuneOutcome {
        rows,
        best,
        config: settings[best],
        model,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        let g = TuneGrid::default();
        let base = TrainConfig::default();
        assert_eq!(g.settings(ModelKind::Rb, &base).len(), 4);
        assert_eq!(g.settings(ModelKind::Lm, &base).len(), 18);
        assert_eq!(g.settings(ModelKind::Rf, &base).len(), 9);
        let lm = g.settings(ModelKind::Lm, &base);
        assert_eq!(lm[0].lambdamart.patience, base.lambdamart.patience);
    }
}
