//! Rank metrics over lists of grades in ranked order. A grade ≥ 1 counts
//! as relevant.

/// Exponential gain `2^grade − 1`.
pub fn gain(grade: u8) -> f64 {
    (1u64 << grade) as f64 - 1.0
}

/// `1 / log2(rank + 1)` for a 1-based rank.
pub fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

pub fn dcg_at_k(grades: &[u8], k: usize) -> f64 {
    grades
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain(g) / ((i + 2) as f64).log2())
        .sum()
}

pub fn ideal_dcg_at_k(grades: &[u8], k: usize) -> f64 {
    let mut ideal = grades.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    dcg_at_k(&ideal, k)
}

/// DCG@k over the ideal DCG@k; 1.0 when there is nothing relevant to find.
pub fn ndcg_at_k(grades: &[u8], k: usize) -> f64 {
    let ideal = ideal_dcg_at_k(grades, k);
    if ideal == 0.0 {
        1.0
    } else {
        dcg_at_k(grades, k) / ideal
    }
}

/// Relevant items in the top `k`, divided by `k` even when fewer are ranked.
pub fn precision_at_k(grades: &[u8], k: usize) -> f64 {
    assert!(k >= 1, "precision cutoff must be positive");
    grades.iter().take(k).filter(|&&g| g >= 1).count() as f64 / k as f64
}

/// Mean of P@r over the ranks r of relevant items; 0 with none.
pub fn average_precision(grades: &[u8]) -> f64 {
    let mut hits = 0;
    let mut sum = 0.0;
    for (i, &g) in grades.iter().enumerate() {
        if g >= 1 {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

/// 1-based rank of the first relevant item.
pub fn first_relevant_rank(grades: &[u8]) -> Option<usize> {
    grades.iter().position(|&g| g >= 1).map(|i| i + 1)
}

pub fn reciprocal_rank(grades: &[u8]) -> f64 {
    first_relevant_rank(grades).map_or(0.0, |r| 1.0 / r as f64)
}

/// Mean reciprocal rank; a query with no relevant item contributes 0.
pub fn mrr(first_ranks: &[Option<usize>]) -> f64 {
    mean(&first_ranks.iter().map(|r| r.map_or(0.0, |r| 1.0 / r as f64)).collect::<Vec<_>>())
}

/// Unweighted mean of per-query average precision.
pub fn mean_average_precision(rankings: &[Vec<u8>]) -> f64 {
    mean(&rankings.iter().map(|g| average_precision(g)).collect::<Vec<_>>())
}

/// Arithmetic mean; 0 for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}
