mod support;

use std::time::Instant;

use newsrank::eval::metrics::{average_precision, mean_average_precision, mrr, ndcg_at_k, precision_at_k, reciprocal_rank};
use newsrank::eval::metrics::first_relevant_rank;

#[test]
fn every_short_list_matches_brute_force() {
    let start = Instant::now();
    let mut oracle = support::IdealOracle::new();
    let lists = support::all_grade_lists(8);
    assert_eq!(lists.len(), (1..=8).map(|n| 3usize.pow(n)).sum::<usize>());
    for g in &lists {
        for k in 1..=10 {
            assert_eq!(ndcg_at_k(g, k), oracle.ndcg(g, k), "NDCG@{k} of {g:?}");
            assert_eq!(precision_at_k(g, k), support::precision(g, k), "P@{k} of {g:?}");
        }
        assert_eq!(average_precision(g), support::average_precision(g), "AP of {g:?}");
        assert_eq!(reciprocal_rank(g), support::reciprocal_rank(g), "RR of {g:?}");
    }
    assert!(start.elapsed().as_secs_f64() < 30.0, "took {:?}", start.elapsed());
}

#[test]
fn ideal_ordering_maximizes_ndcg() {
    // Every grade multiset up to length 8; every ordering of it.
    for list in support::all_grade_lists(8) {
        if !list.windows(2).all(|w| w[0] >= w[1]) {
            continue;
        }
        for k in [1, 3, 5, 10] {
            assert_eq!(ndcg_at_k(&list, k), 1.0);
            for p in support::permutations(&list) {
                assert!(ndcg_at_k(&p, k) <= 1.0, "{p:?} beats the ideal at {k}");
            }
        }
    }
}

#[test]
fn aggregates_are_plain_means() {
    let lists: Vec<Vec<u8>> = vec![vec![0, 2, 1], vec![0, 0], vec![1]];
    let ranks: Vec<Option<usize>> = lists.iter().map(|l| first_relevant_rank(l)).collect();
    let want_mrr = lists.iter().map(|l| support::reciprocal_rank(l)).sum::<f64>() / 3.0;
    assert!((mrr(&ranks) - want_mrr).abs() < 1e-15);
    let want_map = lists.iter().map(|l| support::average_precision(l)).sum::<f64>() / 3.0;
    assert!((mean_average_precision(&lists) - want_map).abs() < 1e-15);
}
