//! Tokenization, stemming and corpus statistics.

mod porter;
mod stats;

use std::ops::Deref;

use serde::{Deserialize, Serialize};

pub use porter::stem;
pub use stats::{build_stats, CorpusStats};

/// Ordered lowercase terms. No term is empty or contains whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenList(Vec<String>);

impl TokenList {
    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// The Porter-stemmed version of every token.
    pub fn stemmed(&self) -> TokenList {
        TokenList(self.0.iter().map(|t| stem(t)).collect())
    }

    pub fn without_stopwords(&self) -> TokenList {
        TokenList(
            self.0
                .iter()
                .filter(|t| !is_stopword(t))
                .cloned()
                .collect(),
        )
    }
}

impl Deref for TokenList {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl FromIterator<String> for TokenList {
    /// Empty strings are dropped so the invariant holds.
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        TokenList(iter.into_iter().filter(|t| !t.is_empty()).collect())
    }
}

/// Splits on every non-alphanumeric character and lowercases. Digits are kept.
pub fn tokenize(text: &str) -> TokenList {
    TokenList(
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(|t| {
                // Some lowercase mappings emit combining marks; drop them so
                // re-tokenizing the output is a no-op.
                t.to_lowercase()
                    .chars()
                    .filter(|c| c.is_alphanumeric())
                    .collect::<String>()
            })
            .filter(|t| !t.is_empty())
            .collect(),
    )
}

/// Byte spans of the tokens [`tokenize`] would produce, in order.
pub(crate) fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// Text-analysis switches shared by pairing and featurization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TextOptions {
    /// Off by default; the standard pipeline keeps every token.
    pub remove_stopwords: bool,
}

impl TextOptions {
    pub fn analyze(&self, text: &str) -> TokenList {
        let tokens = tokenize(text);
        if self.remove_stopwords {
            tokens.without_stopwords()
        } else {
            tokens
        }
    }
}

const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "an", "and", "are", "as", "at", "be", "been", "but", "by", "for",
    "from", "had", "has", "have", "he", "her", "his", "in", "into", "is", "it", "its", "more",
    "of", "on", "or", "s", "she", "that", "the", "their", "they", "this", "to", "was", "were",
    "which", "who", "will", "with",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(t: &TokenList) -> Vec<&str> {
        t.iter().map(String::as_str).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(toks(&tokenize("Gao, Mali, killing")), ["gao", "mali", "killing"]);
        assert!(tokenize("").is_empty());
        assert_eq!(toks(&tokenize("U.S.-led")), ["u", "s", "led"]);
        assert_eq!(toks(&tokenize("at least 76 people")), ["at", "least", "76", "people"]);
        assert_eq!(toks(&tokenize("Mali's deadliest")), ["mali", "s", "deadliest"]);
    }

    #[test]
    fn stopword_table_sorted() {
        assert!(STOPWORDS.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(
            toks(&TextOptions { remove_stopwords: true }.analyze("The camp in Gao")),
            ["camp", "gao"]
        );
    }

    #[test]
    fn spans_match_tokens() {
        let text = "A suicide-bomber, in Gao (Mali)!";
        let from_spans: Vec<String> = token_spans(text)
            .into_iter()
            .map(|(s, e)| text[s..e].to_lowercase())
            .collect();
        assert_eq!(from_spans, tokenize(text).into_inner());
    }

    proptest! {
        #[test]
        fn tokenize_is_a_fixpoint(text in "\\PC{0,60}") {
            let once = tokenize(&text);
            prop_assert!(once.iter().all(|t| !t.is_empty() && !t.contains(char::is_whitespace)));
            let again = tokenize(&once.join(" "));
            prop_assert_eq!(once, again);
        }
    }
}
