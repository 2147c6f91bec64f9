use chrono::NaiveDate;
use newsrank::labels::{aggregate, binary_mode, filter_queries, read_judgments, write_judgments, Judgment};
use newsrank::ltr::{LabelMode, QueryGroup, RankedItem, RankingDataset};

const QUERIES: usize = 74;
const VR: usize = 340;
const R: usize = 135;
const NR: usize = 8653;

/// Three judgments per pair whose majority is the intended grade; a third
/// of the pairs carry one dissenting vote.
fn judgments() -> Vec<Judgment> {
    let grades = std::iter::repeat_n(2u8, VR).chain(std::iter::repeat_n(1, R)).chain(std::iter::repeat_n(0, NR));
    let mut out = Vec::new();
    for (p, g) in grades.enumerate() {
        for a in 0..3 {
            let vote = if a == 2 && p % 3 == 0 { (g + 1) % 3 } else { g };
            out.push(Judgment {
                query_id: format!("q{:02}", p % QUERIES),
                candidate_id: format!("c{p:05}"),
                annotator_id: format!("w{a}"),
                grade: vote,
            });
        }
    }
    out
}

#[test]
fn table_counts_flow_through_aggregation_filtering_and_binary_mode() {
    let mut csv = Vec::new();
    write_judgments(&mut csv, &judgments()).unwrap();
    let js = read_judgments(csv.as_slice()).unwrap();
    assert_eq!(js.len(), 3 * (VR + R + NR));

    let gold = aggregate(&js, 3);
    assert_eq!(gold.counts(), [NR, R, VR]);
    assert!(gold.unlabeled.is_empty());

    let day = NaiveDate::from_ymd_opt(2017, 1, 10).unwrap();
    let mut groups: Vec<QueryGroup> = (0..QUERIES)
        .map(|q| QueryGroup {
            query_id: format!("q{q:02}"),
            date: day,
            items: Vec::new(),
        })
        .collect();
    for (key, label) in &gold.labels {
        let q: usize = key.query_id[1..].parse().unwrap();
        groups[q].items.push(RankedItem {
            candidate_id: key.candidate_id.clone(),
            features: vec![0.0],
            grade: label.grade(),
        });
    }
    let data = filter_queries(RankingDataset::new(vec!["x".into()], LabelMode::Graded, groups));
    assert_eq!(data.groups.len(), QUERIES);
    let before = data.num_items();
    assert_eq!(before, VR + R + NR);

    let binary = binary_mode(data);
    assert_eq!(before - binary.num_items(), R);
    assert_eq!(binary.label_mode, LabelMode::Binary);
    let relevant = binary.groups.iter().flat_map(|g| &g.items).filter(|i| i.grade == 1).count();
    assert_eq!(relevant, VR);
    assert!(binary.groups.iter().flat_map(|g| &g.items).all(|i| i.grade <= 1));

    let again = binary_mode(binary.clone());
    assert_eq!(again, binary);
}
