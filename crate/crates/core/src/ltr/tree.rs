use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A node of a binary regression tree. Samples with `x[feature] <= threshold`
/// go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Axis-aligned regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn go(t: &RegressionTree, at: usize) -> usize {
            match t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Structural check used when loading model files.
    pub fn validate(&self, num_features: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(at) = stack.pop() {
            if std::mem::replace(&mut seen[at], true) {
                return Err(format!("node {at} reached twice"));
            }
            match self.nodes[at] {
                Node::Leaf { value } if !value.is_finite() => return Err(format!("leaf {at} is not finite")),
                Node::Leaf { .. } => {}
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= num_features {
                        return Err(format!("node {at} splits on feature {feature} of {num_features}"));
                    }
                    if !threshold.is_finite() {
                        return Err(format!("node {at} has a non-finite threshold"));
                    }
                    for child in [left, right] {
                        if child >= self.nodes.len() || child <= at {
                            return Err(format!("node {at} has invalid child {child}"));
                        }
                        stack.push(child);
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err("tree has unreachable nodes".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub max_leaves: usize,
    /// Minimum (weighted) number of samples on each side of a split.
    pub min_samples_leaf: usize,
    /// Share of features considered at each split; 1.0 means all.
    pub feature_fraction: f64,
}

/// Row indices sorted by each feature, computed once per training set.
pub(crate) struct Presorted {
    by_feature: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(x: &[&[f64]], num_features: usize) -> Self {
        let by_feature = (0..num_features)
            .into_par_iter()
            .map(|f| {
                let mut idx: Vec<u32> = (0..x.len() as u32).collect();
                idx.sort_by(|&a, &b| x[a as usize][f].total_cmp(&x[b as usize][f]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { by_feature }
    }
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Open {
    node: usize,
    depth: usize,
    rows: Vec<u32>,
    best: Option<Split>,
}

/// Fits a least-squares regression tree to `y`, grown best-first by
/// squared-error reduction. `counts[i]` is the multiplicity of row `i`
/// (0 = not sampled). Leaf values come from `leaf_value(rows)`; rows are
/// listed once each regardless of multiplicity.
pub(crate) fn fit_tree(
    x: &[&[f64]],
    y: &[f64],
    counts: &[u32],
    presorted: &Presorted,
    params: &TreeParams,
    mut rng: Option<&mut ChaCha8Rng>,
    leaf_value: &dyn Fn(&[u32]) -> f64,
) -> RegressionTree {
    let num_features = presorted.by_feature.len();
    let mut node_of: Vec<u32> = counts
        .iter()
        .map(|&c| if c > 0 { 0 } else { u32::MAX })
        .collect();
    let root_rows: Vec<u32> = (0..x.len() as u32).filter(|&i| counts[i as usize] > 0).collect();

    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let find = |rows: &[u32], node: usize, depth: usize, node_of: &[u32], rng: &mut Option<&mut ChaCha8Rng>| {
        if depth >= params.max_depth || rows.len() < 2 {
            return None;
        }
        let features = choose_features(num_features, params.feature_fraction, rng.as_deref_mut());
        best_split(x, y, counts, presorted, rows, node as u32, node_of, &features, params.min_samples_leaf)
    };

    let mut open = vec![Open {
        node: 0,
        depth: 0,
        best: find(&root_rows, 0, 0, &node_of, &mut rng),
        rows: root_rows,
    }];
    let mut leaves = 1;

    while leaves < params.max_leaves {
        // Highest gain first; ties go to the earliest node.
        let pick = open
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.best.map(|s| (i, s.gain, o.node)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)));
        let Some((i, _, _)) = pick else { break };
        let o = open.swap_remove(i);
        let split = o.best.expect("picked node has a split");
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = o
            .rows
            .iter()
            .partition(|&&r| x[r as usize][split.feature] <= split.threshold);
        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[o.node] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        for &r in &left_rows {
            node_of[r as usize] = left as u32;
        }
        for &r in &right_rows {
            node_of[r as usize] = right as u32;
        }
        leaves += 1;
        for (node, rows) in [(left, left_rows), (right, right_rows)] {
            let best = find(&rows, node, o.depth + 1, &node_of, &mut rng);
            open.push(Open {
                node,
                depth: o.depth + 1,
                rows,
                best,
            });
        }
    }
    for o in open {
        nodes[o.node] = Node::Leaf {
            value: leaf_value(&o.rows),
        };
    }
    RegressionTree { nodes }
}

fn choose_features(num_features: usize, fraction: f64, rng: Option<&mut ChaCha8Rng>) -> Vec<usize> {
    match rng {
        Some(rng) if fraction < 1.0 => {
            let k = ((num_features as f64 * fraction).round() as usize).clamp(1, num_features);
            let mut f = index::sample(rng, num_features, k).into_vec();
            f.sort_unstable();
            f
        }
        _ => (0..num_features).collect(),
    }
}

#[allow(clippy::too_many_arguments)]
fn best_split(
    x: &[&[f64]],
    y: &[f64],
    counts: &[u32],
    presorted: &Presorted,
    rows: &[u32],
    node: u32,
    node_of: &[u32],
    features: &[usize],
    min_samples_leaf: usize,
) -> Option<Split> {
    let (total_n, total_s) = rows.iter().fold((0.0, 0.0), |(n, s), &r| {
        let c = counts[r as usize] as f64;
        (n + c, s + c * y[r as usize])
    });
    let min_leaf = min_samples_leaf.max(1) as f64;
    if total_n < 2.0 * min_leaf {
        return None;
    }
    let parent = total_s * total_s / total_n;
    // Small nodes sort their own rows; large ones filter the global order.
    let local = rows.len() * 8 < x.len();

    let per_feature: Vec<Option<Split>> = features
        .par_iter()
        .map(|&f| {
            let ordered: Vec<u32> = if local {
                let mut r = rows.to_vec();
                r.sort_by(|&a, &b| x[a as usize][f].total_cmp(&x[b as usize][f]).then(a.cmp(&b)));
                r
            } else {
                presorted.by_feature[f]
                    .iter()
                    .copied()
                    .filter(|&r| node_of[r as usize] == node)
                    .collect()
            };
            let mut best: Option<Split> = None;
            let (mut n, mut s) = (0.0, 0.0);
            for w in 0..ordered.len() - 1 {
                let r = ordered[w] as usize;
                let c = counts[r] as f64;
                n += c;
                s += c * y[r];
                let (v, next) = (x[r][f], x[ordered[w + 1] as usize][f]);
                if v == next || n < min_leaf || total_n - n < min_leaf {
                    continue;
                }
                let rs = total_s - s;
                let gain = s * s / n + rs * rs / (total_n - n) - parent;
                if gain > 1e-12 && best.is_none_or(|b| gain > b.gain) {
                    let mut threshold = v + (next - v) / 2.0;
                    if !(threshold < next) {
                        threshold = v;
                    }
                    best = Some(Split {
                        feature: f,
                        threshold,
                        gain,
                    });
                }
            }
            best
        })
        .collect();
    per_feature
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<Split>, s| match acc {
            Some(a) if a.gain >= s.gain => Some(a),
            _ => Some(s),
        })
}

/// Weighted mean of `y` over `rows`.
pub(crate) fn mean_leaf<'a>(y: &'a [f64], counts: &'a [u32]) -> impl Fn(&[u32]) -> f64 + 'a {
    move |rows| {
        let (n, s) = rows.iter().fold((0.0, 0.0), |(n, s), &r| {
            let c = counts[r as usize] as f64;
            (n + c, s + c * y[r as usize])
        });
        if n > 0.0 {
            s / n
        } else {
            0.0
        }
    }
}
