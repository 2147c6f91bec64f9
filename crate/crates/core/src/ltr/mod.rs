//! Learning to rank: RankBoost, LambdaMART and random forests over query
//! groups of feature vectors, plus a versioned JSON model format.

mod dataset;
pub mod forest;
pub mod lambdamart;
mod model;
pub mod rankboost;
pub mod tree;
pub mod tune;

pub use dataset::{LabelMode, QueryGroup, RankedItem, RankingDataset};
pub use forest::{train_random_forest, ForestLog, ForestParams, RandomForestModel};
pub use lambdamart::{train_lambdamart, IterationLog, LambdaMartModel, LambdaMartParams};
pub use model::{train, Model, ModelKind, Ranker, TrainConfig, TrainingLog, MODEL_SCHEMA};
pub use rankboost::{train_rankboost, RankBoostModel, RankBoostParams, Round, RoundLog, Stump};
pub use tree::RegressionTree;
pub use tune::{tune, TuneGrid, TuneOutcome, TuneRow};
