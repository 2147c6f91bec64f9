//! LambdaMART: boosted regression trees fitted to NDCG@10 lambda gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{QueryGroup, RankingDataset};
use super::tree::{fit_tree, Presorted, RegressionTree, TreeParams};
use crate::error::TrainError;
use crate::eval::metrics::{discount, gain, ideal_dcg_at_k, mean, ndcg_at_k};

/// Rank cutoff of the NDCG driving the gradients and early stopping.
pub const LAMBDA_CUTOFF: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LambdaMartParams {
    pub num_trees: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Share of features tried at each split.
    pub feature_fraction: f64,
    /// Stop after this many trees without a validation gain.
    pub patience: usize,
}

impl Default for LambdaMartParams {
    fn default() -> Self {
        Self {
            num_trees: 300,
            learning_rate: 0.1,
            max_leaves: 10,
            max_depth: 8,
            min_samples_leaf: 1,
            feature_fraction: 1.0,
            patience: 50,
        }
    }
}

impl LambdaMartParams {
    fn check(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Hyperparameter(format!("lambdamart: {m}")));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a finite non-negative number");
        }
        if self.max_leaves < 2 {
            return bad("max_leaves must be at least 2");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be positive");
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return bad("feature_fraction must be in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaMartModel {
    pub params: LambdaMartParams,
    pub trees: Vec<RegressionTree>,
}

impl LambdaMartModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.params.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub trees: usize,
    pub train_ndcg: f64,
    pub valid_ndcg: Option<f64>,
}

/// Positions of a group's items when sorted by descending score, ties by
/// item order (items are kept sorted by candidate id).
fn ranked_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Mean NDCG@10 of the groups under `scores` (flattened in group order).
pub(crate) fn mean_ndcg(groups: &[QueryGroup], scores: &[f64], k: usize) -> f64 {
    let mut offset = 0;
    let per: Vec<f64> = groups
        .iter()
        .map(|g| {
            let s = &scores[offset..offset + g.items.len()];
            offset += g.items.len();
            let grades: Vec<u8> = ranked_order(s).into_iter().map(|i| g.items[i].grade).collect();
            ndcg_at_k(&grades, k)
        })
        .collect();
    mean(&per)
}

/// Lambdas and second-order weights for one group.
fn group_lambdas(group: &QueryGroup, scores: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = group.items.len();
    let mut lambda = vec![0.0; n];
    let mut weight = vec![0.0; n];
    let grades = group.grades();
    let idcg = ideal_dcg_at_k(&grades, LAMBDA_CUTOFF);
    if idcg == 0.0 {
        return (lambda, weight);
    }
    let mut disc = vec![0.0; n];
    for (pos, i) in ranked_order(scores).into_iter().enumerate() {
        if pos < LAMBDA_CUTOFF {
            disc[i] = discount(pos + 1);
        }
    }
    for (i, j) in group.crucial_pairs() {
        let delta = ((gain(grades[i]) - gain(grades[j])) * (disc[i] - disc[j])).abs() / idcg;
        if delta == 0.0 {
            continue;
        }
        let rho = 1.0 / (1.0 + (scores[i] - scores[j]).exp());
        lambda[i] += delta * rho;
        lambda[j] -= delta * rho;
        let w = delta * rho * (1.0 - rho);
        weight[i] += w;
        weight[j] += w;
    }
    (lambda, weight)
}

fn flat_rows(data: &RankingDataset) -> Vec<&[f64]> {
    data.groups
        .iter()
        .flat_map(|g| g.items.iter().map(|i| i.features.as_slice()))
        .collect()
}

/// Boosts up to `num_trees` trees, then keeps the prefix with the best
/// validation NDCG@10. Without validation groups every tree is kept.
pub fn train_lambdamart(
    train: &RankingDataset,
    valid: &RankingDataset,
    params: &LambdaMartParams,
    seed: u64,
) -> Result<(LambdaMartModel, Vec<IterationLog>), TrainError> {
    params.check()?;
    if train.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if train.crucial_pair_count() == 0 {
        return Err(TrainError::NoCrucialPairs);
    }
    let rows = flat_rows(train);
    let valid_rows = flat_rows(valid);
    let presorted = Presorted::new(&rows, train.num_features());
    let counts = vec![1u32; rows.len()];
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        max_leaves: params.max_leaves,
        min_samples_leaf: params.min_samples_leaf,
        feature_fraction: params.feature_fraction,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut scores = vec![0.0; rows.len()];
    let mut valid_scores = vec![0.0; valid_rows.len()];
    let mut model = LambdaMartModel {
        params: *params,
        trees: Vec::new(),
    };
    let mut log = Vec::new();
    let has_valid = !valid.groups.is_empty();
    let mut best = (0, mean_ndcg(&valid.groups, &valid_scores, LAMBDA_CUTOFF));

    for t in 0..params.num_trees {
        let mut offset = 0;
        let spans: Vec<(usize, &QueryGroup)> = train
            .groups
            .iter()
            .map(|g| {
                let o = offset;
                offset += g.items.len();
                (o, g)
            })
            .collect();
        let parts: Vec<(Vec<f64>, Vec<f64>)> = spans
            .par_iter()
            .map(|&(o, g)| group_lambdas(g, &scores[o..o + g.items.len()]))
            .collect();
        let (lambda, weight): (Vec<f64>, Vec<f64>) = parts
            .into_iter()
            .flat_map(|(l, w)| l.into_iter().zip(w))
            .unzip();

        let leaf = |rs: &[u32]| {
            let (l, w) = rs.iter().fold((0.0, 0.0), |(l, w), &r| {
                (l + lambda[r as usize], w + weight[r as usize])
            });
            if w > 1e-12 {
                l / w
            } else {
                0.0
            }
        };
        let sub = (params.feature_fraction < 1.0).then_some(&mut rng);
        let tree = fit_tree(&rows, &lambda, &counts, &presorted, &tree_params, sub, &leaf);
        for (s, r) in scores.iter_mut().zip(&rows) {
            *s += params.learning_rate * tree.predict(r);
        }
        for (s, r) in valid_scores.iter_mut().zip(&valid_rows) {
            *s += params.learning_rate * tree.predict(r);
        }
        model.trees.push(tree);

        let train_ndcg = mean_ndcg(&train.groups, &scores, LAMBDA_CUTOFF);
        let valid_ndcg = has_valid.then(|| mean_ndcg(&valid.groups, &valid_scores, LAMBDA_CUTOFF));
        log.push(IterationLog {
            trees: t + 1,
            train_ndcg,
            valid_ndcg,
        });
        if let Some(v) = valid_ndcg {
            if v > best.1 {
                best = (t + 1, v);
            } else if t + 1 - best.0 >= params.patience.max(1) {
                log::debug!("lambdamart: early stop at {} trees, best {}", t + 1, best.0);
                break;
            }
        }
    }
    if has_valid {
        model.trees.truncate(best.0);
    }
    Ok((model, log))
}
