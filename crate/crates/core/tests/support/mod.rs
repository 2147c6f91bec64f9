//! Independent reference implementations used as test oracles. Each is a
//! direct transcription of the textbook definition and shares no code with
//! the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use chrono::NaiveDate;
use newsrank::corpus::{CandidateTriple, QueryEvent};
use newsrank::ltr::{LabelMode, QueryGroup, RankedItem, RankingDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Term scoring.

fn distinct<'a>(terms: &'a [&'a str]) -> Vec<&'a str> {
    let mut seen = HashSet::new();
    terms.iter().copied().filter(|t| seen.insert(*t)).collect()
}

fn count(term: &str, doc: &[&str]) -> f64 {
    doc.iter().filter(|t| **t == term).count() as f64
}

fn doc_freq(term: &str, corpus: &[Vec<&str>]) -> f64 {
    corpus.iter().filter(|d| d.contains(&term)).count() as f64
}

pub fn tf(query: &[&str], doc: &[&str]) -> f64 {
    distinct(query).iter().map(|t| count(t, doc)).sum()
}

pub fn tfidf(query: &[&str], doc: &[&str], corpus: &[Vec<&str>]) -> f64 {
    let n = corpus.len() as f64;
    distinct(query)
        .iter()
        .map(|t| count(t, doc) * (((n + 1.0) / (doc_freq(t, corpus) + 1.0)).ln() + 1.0))
        .sum()
}

pub fn bm25(query: &[&str], doc: &[&str], corpus: &[Vec<&str>], k1: f64, b: f64) -> f64 {
    let n = corpus.len() as f64;
    let avgdl = corpus.iter().map(|d| d.len()).sum::<usize>() as f64 / n;
    let dl = doc.len() as f64;
    let mut score = 0.0;
    for t in distinct(query) {
        let f = count(t, doc);
        if f == 0.0 {
            continue;
        }
        let df = doc_freq(t, corpus);
        let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
        let norm = if avgdl > 0.0 { dl / avgdl } else { 0.0 };
        score += idf * (f * (k1 + 1.0)) / (f + k1 * (1.0 - b + b * norm));
    }
    score
}

/// A small random corpus over a tiny vocabulary so terms repeat, plus a
/// query drawn from the same vocabulary with some unseen words.
pub fn random_corpus(rng: &mut ChaCha8Rng) -> (Vec<String>, Vec<Vec<String>>) {
    const VOCAB: [&str; 12] = [
        "army", "attack", "bomb", "city", "mali", "gao", "police", "riot", "strike", "talks", "vote", "zzz",
    ];
    let docs = rng.random_range(1..=8);
    let corpus: Vec<Vec<String>> = (0..docs)
        .map(|_| {
            let len = rng.random_range(0..=10);
            (0..len).map(|_| VOCAB[rng.random_range(0..11)].to_string()).collect()
        })
        .collect();
    let qlen = rng.random_range(1..=6);
    let query = (0..qlen).map(|_| VOCAB[rng.random_range(0..12)].to_string()).collect();
    (query, corpus)
}

// Rank metrics.

pub fn dcg(grades: &[u8], k: usize) -> f64 {
    let mut s = 0.0;
    for i in 1..=k.min(grades.len()) {
        s += (2f64.powi(grades[i - 1] as i32) - 1.0) / ((i + 1) as f64).log2();
    }
    s
}

/// Every ordering of `items`.
pub fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Ideal DCG@k found by trying every ordering, memoized per grade multiset.
pub struct IdealOracle {
    cache: BTreeMap<(Vec<u8>, usize), f64>,
}

impl IdealOracle {
    pub fn new() -> Self {
        Self { cache: BTreeMap::new() }
    }

    pub fn ideal(&mut self, grades: &[u8], k: usize) -> f64 {
        let mut key = grades.to_vec();
        key.sort_unstable();
        *self.cache.entry((key.clone(), k)).or_insert_with(|| {
            permutations(&key).iter().map(|p| dcg(p, k)).fold(0.0, f64::max)
        })
    }

    pub fn ndcg(&mut self, grades: &[u8], k: usize) -> f64 {
        let ideal = self.ideal(grades, k);
        if ideal == 0.0 {
            1.0
        } else {
            dcg(grades, k) / ideal
        }
    }
}

pub fn precision(grades: &[u8], k: usize) -> f64 {
    let mut hits = 0;
    for i in 0..k {
        if i < grades.len() && grades[i] > 0 {
            hits += 1;
        }
    }
    hits as f64 / k as f64
}

pub fn average_precision(grades: &[u8]) -> f64 {
    let relevant = grades.iter().filter(|&&g| g > 0).count();
    if relevant == 0 {
        return 0.0;
    }
    let mut s = 0.0;
    for r in 1..=grades.len() {
        if grades[r - 1] > 0 {
            s += precision(grades, r);
        }
    }
    s / relevant as f64
}

pub fn reciprocal_rank(grades: &[u8]) -> f64 {
    for r in 1..=grades.len() {
        if grades[r - 1] > 0 {
            return 1.0 / r as f64;
        }
    }
    0.0
}

/// All grade lists over {0, 1, 2} with length 1..=max_len.
pub fn all_grade_lists(max_len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .into_iter()
            .flat_map(|l| (0..3u8).map(move |g| [l.clone(), vec![g]].concat()))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

// Pairwise ranking.

/// Ordered (higher grade, lower grade) index pairs within each group, with
/// indices into the flattened item list.
pub fn crucial_pairs(data: &RankingDataset) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut base = 0;
    for g in &data.groups {
        for (i, a) in g.items.iter().enumerate() {
            for (j, b) in g.items.iter().enumerate() {
                if a.grade > b.grade {
                    pairs.push((base + i, base + j));
                }
            }
        }
        base += g.items.len();
    }
    pairs
}

/// `(1/|P|) Σ exp(−(H(upper) − H(lower)))` for scores `h`.
pub fn exp_pairwise_loss(pairs: &[(usize, usize)], h: &[f64]) -> f64 {
    pairs.iter().map(|&(u, l)| (-(h[u] - h[l])).exp()).sum::<f64>() / pairs.len() as f64
}

/// Weighted share of pairs a {0,1} weak ranker orders wrongly, counting a
/// tie as half an error: `Σ D (1 − (h(u) − h(l))) / 2`.
pub fn weighted_pairwise_error(pairs: &[(usize, usize)], d: &[f64], h: &[f64]) -> f64 {
    pairs
        .iter()
        .zip(d)
        .map(|(&(u, l), w)| w * (1.0 - (h[u] - h[l])) / 2.0)
        .sum()
}

/// Pair weights induced by ensemble scores `h`: proportional to
/// `exp(−(H(upper) − H(lower)))`, summing to 1.
pub fn pair_distribution(pairs: &[(usize, usize)], h: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = pairs.iter().map(|&(u, l)| (-(h[u] - h[l])).exp()).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / z).collect()
}

/// Random query groups with mixed grades and a few tied feature values.
pub fn random_groups(seed: u64, groups: usize, num_features: usize) -> RankingDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let day = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let groups = (0..groups)
        .map(|q| {
            let n = rng.random_range(4..=12);
            let items = (0..n)
                .map(|i| {
                    let features: Vec<f64> = (0..num_features)
                        .map(|_| (rng.random_range(0.0..4.0f64) * 4.0).round() / 4.0)
                        .collect();
                    let signal = features[0] + 0.5 * features[1 % num_features] + rng.random_range(-1.0..1.0);
                    let grade = if signal > 4.0 {
                        2
                    } else if signal > 2.5 {
                        1
                    } else {
                        0
                    };
                    RankedItem {
                        candidate_id: format!("c{i:02}"),
                        features,
                        grade,
                    }
                })
                .collect();
            QueryGroup {
                query_id: format!("q{q:02}"),
                date: day,
                items,
            }
        })
        .collect();
    let names = (0..num_features).map(|f| format!("f{f}")).collect();
    RankingDataset::new(names, LabelMode::Graded, groups)
}

// Student t.

/// Two-tailed p-value of `t` with `df` degrees of freedom, by integrating
/// the unnormalized density after the substitution `t = tan θ`.
pub fn t_two_tailed_p(t: f64, df: f64) -> f64 {
    let density = |theta: f64| {
        let x = theta.tan();
        let c = theta.cos();
        (1.0 + x * x / df).powf(-(df + 1.0) / 2.0) / (c * c)
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let total = simpson(&density, -half_pi, half_pi, 200_000);
    let tail = simpson(&density, t.abs().atan(), half_pi, 200_000);
    (2.0 * tail / total).min(1.0)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    // Stay just inside ±π/2 so tan θ is finite.
    let eval = |x: f64| {
        let x = x.clamp(-std::f64::consts::FRAC_PI_2 + 1e-12, std::f64::consts::FRAC_PI_2 - 1e-12);
        f(x)
    };
    let mut s = eval(a) + eval(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * eval(x);
    }
    s * h / 3.0
}

// Corpus fixtures.

pub const Q0: &str = "A suicide bomber detonates a vehicle full of explosives at a military camp \
                      in Gao, Mali, killing at least 76 people and wounding scores more in Mali's \
                      deadliest terrorist attack in history.";

pub fn q0() -> QueryEvent {
    QueryEvent {
        id: "q0".into(),
        text: Q0.into(),
        date: NaiveDate::from_ymd_opt(2017, 1, 17).unwrap(),
    }
}

/// The two candidates of the worked example: same event, c1 with a
/// different object and city.
pub fn c0_c1() -> (CandidateTriple, CandidateTriple) {
    let c0 = CandidateTriple {
        id: "c0".into(),
        subject: "Armed Gang".into(),
        predicate: "Carry out suicide bombing".into(),
        predicate_code: String::new(),
        predicate_description: String::new(),
        object: "Armed rebel".into(),
        city: "Gao".into(),
        country: "Mali".into(),
        date: NaiveDate::from_ymd_opt(2017, 1, 17).unwrap(),
    };
    let c1 = CandidateTriple {
        id: "c1".into(),
        object: "Military".into(),
        city: "Bamako".into(),
        ..c0.clone()
    };
    (c0, c1)
}
