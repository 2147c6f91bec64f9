//! RankBoost over crucial pairs with {0,1} threshold stumps.
//!
//! A stump fires (`h = 1`) when `x[feature] > threshold`, or when
//! `x[feature] <= threshold` for a reversed stump. Each round picks the stump
//! with the smallest weighted pairwise error `ε = W− + W0/2` under the
//! current pair distribution `D`, weights it by `α = ½ ln((1 − ε)/ε)` and
//! reweights pairs by `exp(−α (h(upper) − h(lower)))`.

use serde::{Deserialize, Serialize};

use super::dataset::RankingDataset;
use crate::error::TrainError;

/// Guards `α` against a weak learner with no weighted errors.
const MIN_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    /// Fires below the threshold instead of above it.
    pub reversed: bool,
}

impl Stump {
    pub fn fires(&self, x: &[f64]) -> bool {
        (x[self.feature] > self.threshold) != self.reversed
    }

    pub fn output(&self, x: &[f64]) -> f64 {
        if self.fires(x) {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub stump: Stump,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankBoostParams {
    pub rounds: usize,
}

impl Default for RankBoostParams {
    fn default() -> Self {
        Self { rounds: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankBoostModel {
    pub params: RankBoostParams,
    pub rounds: Vec<Round>,
}

impl RankBoostModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.rounds.iter().map(|r| r.alpha * r.stump.output(x)).sum()
    }
}

/// Per-round training statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    /// Weighted pairwise error of the selected stump under that round's `D`.
    pub epsilon: f64,
    pub alpha: f64,
    /// `Σ D₁ exp(−(H(upper) − H(lower)))` after the round, with `D₁` uniform.
    pub loss: f64,
}

pub fn train_rankboost(
    data: &RankingDataset,
    params: &RankBoostParams,
) -> Result<(RankBoostModel, Vec<RoundLog>), TrainError> {
    if params.rounds == 0 {
        return Err(TrainError::Hyperparameter("rankboost rounds must be positive".into()));
    }
    let rows: Vec<&[f64]> = data
        .groups
        .iter()
        .flat_map(|g| g.items.iter().map(|i| i.features.as_slice()))
        .collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut offset = 0;
    for g in &data.groups {
        pairs.extend(g.crucial_pairs().map(|(i, j)| (offset + i, offset + j)));
        offset += g.items.len();
    }
    if pairs.is_empty() {
        return Err(TrainError::NoCrucialPairs);
    }

    // Candidate thresholds per feature: midpoints between distinct values,
    // with rows sorted by descending value for the cumulative scan.
    let num_features = data.num_features();
    let order: Vec<Vec<usize>> = (0..num_features)
        .map(|f| {
            let mut idx: Vec<usize> = (0..rows.len()).collect();
            idx.sort_by(|&a, &b| rows[b][f].total_cmp(&rows[a][f]).then(a.cmp(&b)));
            idx
        })
        .collect();

    let n_pairs = pairs.len() as f64;
    let mut d = vec![1.0 / n_pairs; pairs.len()];
    let mut margin = vec![0.0; pairs.len()];
    let mut model = RankBoostModel {
        params: *params,
        rounds: Vec::new(),
    };
    let mut log = Vec::new();
    let mut potential = vec![0.0; rows.len()];

    for _ in 0..params.rounds {
        potential.iter_mut().for_each(|p| *p = 0.0);
        for (&(hi, lo), &w) in pairs.iter().zip(&d) {
            potential[hi] += w;
            potential[lo] -= w;
        }
        // r(f, θ) = Σ_{x_f > θ} π(x) = W+ − W−; a reversed stump has −r.
        let mut best: Option<(f64, Stump)> = None;
        for (f, idx) in order.iter().enumerate() {
            let mut r = 0.0;
            for w in 0..idx.len() - 1 {
                r += potential[idx[w]];
                let (v, next) = (rows[idx[w]][f], rows[idx[w + 1]][f]);
                if v == next {
                    continue;
                }
                if best.is_none_or(|(b, _)| r.abs() > b.abs()) {
                    let mut threshold = next + (v - next) / 2.0;
                    if !(threshold < v) {
                        threshold = next;
                    }
                    best = Some((
                        r,
                        Stump {
                            feature: f,
                            threshold,
                            reversed: r < 0.0,
                        },
                    ));
                }
            }
        }
        let Some((r, stump)) = best else { break };
        let epsilon = (1.0 - r.abs()) / 2.0;
        if epsilon >= 0.5 - 1e-12 {
            break;
        }
        let alpha = 0.5 * ((1.0 - epsilon.max(MIN_EPSILON)) / epsilon.max(MIN_EPSILON)).ln();

        let mut z = 0.0;
        for (k, &(hi, lo)) in pairs.iter().enumerate() {
            let delta = stump.output(rows[hi]) - stump.output(rows[lo]);
            margin[k] += alpha * delta;
            d[k] *= (-alpha * delta).exp();
            z += d[k];
        }
        d.iter_mut().for_each(|w| *w /= z);
        let loss = margin.iter().map(|m| (-m).exp()).sum::<f64>() / n_pairs;
        log::debug!("rankboost round {}: eps={epsilon:.6} alpha={alpha:.6} loss={loss:.6}", log.len() + 1);
        model.rounds.push(Round { stump, alpha });
        log.push(RoundLog { epsilon, alpha, loss });
        if epsilon <= MIN_EPSILON {
            break;
        }
    }
    Ok((model, log))
}
