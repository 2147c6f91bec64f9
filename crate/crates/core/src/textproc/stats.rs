use std::collections::{HashMap, HashSet};

use super::TokenList;

/// Document-frequency statistics over a fixed document collection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStats {
    pub doc_count: usize,
    pub doc_freq: HashMap<String, usize>,
    pub avg_doc_len: f64,
}

impl CorpusStats {
    /// Number of documents containing `term`; 0 for unseen terms.
    pub fn df(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }
}

pub fn build_stats<'a, I>(documents: I) -> CorpusStats
where
    I: IntoIterator<Item = &'a TokenList>,
{
    let mut doc_count = 0;
    let mut total_len = 0usize;
    let mut doc_freq: HashMap<String, usize> = HashMap::new();
    for doc in documents {
        doc_count += 1;
        total_len += doc.len();
        let distinct: HashSet<&String> = doc.iter().collect();
        for term in distinct {
            *doc_freq.entry(term.clone()).or_default() += 1;
        }
    }
    let avg_doc_len = if doc_count == 0 {
        0.0
    } else {
        total_len as f64 / doc_count as f64
    };
    CorpusStats {
        doc_count,
        doc_freq,
        avg_doc_len,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(words: &[&str]) -> TokenList {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn hand_counted() {
        let docs = [doc(&["a", "b"]), doc(&["b", "c"])];
        let s = build_stats(&docs);
        assert_eq!(s.doc_count, 2);
        assert_eq!((s.df("a"), s.df("b"), s.df("c"), s.df("z")), (1, 2, 1, 0));
        assert_eq!(s.avg_doc_len, 2.0);
    }

    #[test]
    fn empty_collection() {
        let s = build_stats(&[]);
        assert_eq!(s.doc_count, 0);
        assert!(s.doc_freq.is_empty());
        assert_eq!(s.avg_doc_len, 0.0);
    }

    proptest! {
        // Independent recount: for each term, scan every document linearly.
        #[test]
        fn matches_brute_force_recount(
            docs in prop::collection::vec(prop::collection::vec("[a-e]", 0..8), 0..100)
        ) {
            let docs: Vec<TokenList> = docs.into_iter().map(|d| d.into_iter().collect()).collect();
            let s = build_stats(&docs);
            prop_assert_eq!(s.doc_count, docs.len());
            for term in ["a", "b", "c", "d", "e"] {
                let mut count = 0;
                for d in &docs {
                    if d.iter().any(|t| t == term) {
                        count += 1;
                    }
                }
                prop_assert_eq!(s.df(term), count);
                if count > 0 {
                    prop_assert!(count <= s.doc_count);
                }
            }
            let total: usize = docs.iter().map(|d| d.len()).sum();
            let expected = if docs.is_empty() { 0.0 } else { total as f64 / docs.len() as f64 };
            prop_assert_eq!(s.avg_doc_len, expected);
        }
    }
}
