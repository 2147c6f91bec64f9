mod support;

use newsrank::ltr::{train_rankboost, RankBoostModel, RankBoostParams};

#[test]
fn every_round_beats_chance_and_lowers_the_loss() {
    let data = support::random_groups(11, 30, 4);
    let params = RankBoostParams { rounds: 60 };
    let (model, log) = train_rankboost(&data, &params).unwrap();
    assert!(!log.is_empty());
    assert_eq!(log.len(), model.rounds.len());

    let rows: Vec<&[f64]> = data.groups.iter().flat_map(|g| g.items.iter().map(|i| i.features.as_slice())).collect();
    let pairs = support::crucial_pairs(&data);
    let scores = |m: &RankBoostModel| rows.iter().map(|x| m.score(x)).collect::<Vec<f64>>();
    let mut prefix = RankBoostModel { params, rounds: Vec::new() };
    let mut prev_loss = support::exp_pairwise_loss(&pairs, &scores(&prefix));
    assert!((prev_loss - 1.0).abs() < 1e-12);
    for (t, (round, entry)) in model.rounds.iter().zip(&log).enumerate() {
        let d = support::pair_distribution(&pairs, &scores(&prefix));
        let h: Vec<f64> = rows.iter().map(|x| round.stump.output(x)).collect();
        let eps = support::weighted_pairwise_error(&pairs, &d, &h);
        assert!(eps < 0.5, "round {t}: error {eps}");
        assert!((eps - entry.epsilon).abs() < 1e-9, "round {t}: logged {} vs {eps}", entry.epsilon);
        let want_alpha = 0.5 * ((1.0 - eps.max(1e-10)) / eps.max(1e-10)).ln();
        assert!((round.alpha - want_alpha).abs() < 1e-6 * want_alpha.abs().max(1.0));

        prefix.rounds.push(*round);
        let loss = support::exp_pairwise_loss(&pairs, &scores(&prefix));
        assert!(loss <= prev_loss * (1.0 + 1e-12), "round {t}: loss rose {prev_loss} -> {loss}");
        assert!((loss - entry.loss).abs() < 1e-9 * loss.max(1.0));
        prev_loss = loss;
    }
}
