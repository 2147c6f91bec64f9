//! Random forest regression on relevance grades.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::RankingDataset;
use super::tree::{fit_tree, mean_leaf, Presorted, RegressionTree, TreeParams};
use crate::error::TrainError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub num_trees: usize,
    pub max_depth: usize,
    /// Share of features tried at each split.
    pub feature_subsample: f64,
    pub bootstrap: bool,
    pub min_samples_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            num_trees: 100,
            max_depth: 10,
            feature_subsample: 0.33,
            bootstrap: true,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub params: ForestParams,
    pub trees: Vec<RegressionTree>,
}

impl RandomForestModel {
    /// Mean of the trees' predictions.
    pub fn score(&self, x: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.0;
        }
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestLog {
    /// Mean squared error of out-of-bag predictions over the samples left
    /// out by at least one tree; `None` without bootstrapping.
    pub oob_mse: Option<f64>,
    pub oob_samples: usize,
}

/// Trains `num_trees` trees in parallel. Tree `t` draws from its own
/// ChaCha stream of `seed`, so the result does not depend on scheduling.
pub fn train_random_forest(
    data: &RankingDataset,
    params: &ForestParams,
    seed: u64,
) -> Result<(RandomForestModel, ForestLog), TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if params.num_trees == 0 || params.max_depth == 0 {
        return Err(TrainError::Hyperparameter("forest: num_trees and max_depth must be positive".into()));
    }
    if !(params.feature_subsample > 0.0 && params.feature_subsample <= 1.0) {
        return Err(TrainError::Hyperparameter("forest: feature_subsample must be in (0, 1]".into()));
    }
    let rows: Vec<&[f64]> = data
        .groups
        .iter()
        .flat_map(|g| g.items.iter().map(|i| i.features.as_slice()))
        .collect();
    let y: Vec<f64> = data
        .groups
        .iter()
        .flat_map(|g| g.items.iter().map(|i| i.grade as f64))
        .collect();
    let n = rows.len();
    let presorted = Presorted::new(&rows, data.num_features());
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        max_leaves: usize::MAX,
        min_samples_leaf: params.min_samples_leaf,
        feature_fraction: params.feature_subsample,
    };

    let grown: Vec<(RegressionTree, Vec<(usize, f64)>)> = (0..params.num_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let counts = if params.bootstrap {
                let mut c = vec![0u32; n];
                for _ in 0..n {
                    c[rng.random_range(0..n)] += 1;
                }
                c
            } else {
                vec![1u32; n]
            };
            let leaf = mean_leaf(&y, &counts);
            let tree = fit_tree(&rows, &y, &counts, &presorted, &tree_params, Some(&mut rng), &leaf);
            let oob = (0..n)
                .filter(|&i| counts[i] == 0)
                .map(|i| (i, tree.predict(rows[i])))
                .collect();
            (tree, oob)
        })
        .collect();

    let mut oob_sum = vec![0.0; n];
    let mut oob_count = vec![0u32; n];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, oob) in grown {
        for (i, p) in oob {
            oob_sum[i] += p;
            oob_count[i] += 1;
        }
        trees.push(tree);
    }
    let scored: Vec<f64> = (0..n)
        .filter(|&i| oob_count[i] > 0)
        .map(|i| (oob_sum[i] / oob_count[i] as f64 - y[i]).powi(2))
        .collect();
    let log = ForestLog {
        oob_mse: (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64),
        oob_samples: scored.len(),
    };
    Ok((
        RandomForestModel {
            params: *params,
            trees,
        },
        log,
    ))
}
