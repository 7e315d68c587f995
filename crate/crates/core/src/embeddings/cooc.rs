use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::TokenStream;

/// Weighted co-occurrence counts over a frequency-filtered vocabulary.
///
/// `entries` holds every non-zero cell `(i, j, x_ij)` sorted by `(i, j)`;
/// both `(i, j)` and `(j, i)` are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoocMatrix {
    pub vocab: Vec<String>,
    pub frequencies: Vec<usize>,
    pub entries: Vec<(u32, u32, f64)>,
}

impl CoocMatrix {
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.vocab.iter().position(|w| w == word)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let key = (i as u32, j as u32);
        match self.entries.binary_search_by(|e| (e.0, e.1).cmp(&key)) {
            Ok(pos) => self.entries[pos].2,
            Err(_) => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

/// Counts co-occurrences within a symmetric window; a pair at distance `d`
/// adds `1/d`. Words seen fewer than `min_count` times are removed from the
/// streams before counting. The vocabulary is ordered by descending
/// frequency, then alphabetically.
pub fn build_cooccurrence(streams: &[TokenStream], window: usize, min_count: usize) -> Result<CoocMatrix> {
    if window == 0 || min_count == 0 {
        return Err(Error::InvalidInput("window and min_count must be at least 1".into()));
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for s in streams {
        for t in &s.tokens {
            *freq.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = freq.into_iter().filter(|(_, c)| *c >= min_count).collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary { min_count });
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let index: HashMap<&str, u32> = kept.iter().enumerate().map(|(i, (w, _))| (*w, i as u32)).collect();

    let mut cells: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for s in streams {
        let ids: Vec<u32> = s.tokens.iter().filter_map(|t| index.get(t.as_str()).copied()).collect();
        for (p, &wi) in ids.iter().enumerate() {
            for d in 1..=window {
                let Some(&wj) = ids.get(p + d) else { break };
                let w = 1.0 / d as f64;
                *cells.entry((wi, wj)).or_insert(0.0) += w;
                *cells.entry((wj, wi)).or_insert(0.0) += w;
            }
        }
    }
    Ok(CoocMatrix {
        vocab: kept.iter().map(|(w, _)| w.to_string()).collect(),
        frequencies: kept.iter().map(|(_, c)| *c).collect(),
        entries: cells.into_iter().map(|((i, j), x)| (i, j, x)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(words: &[&str]) -> TokenStream {
        TokenStream {
            tokens: words.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn hand_counted_window() {
        let m = build_cooccurrence(&[ts(&["a", "b", "c"])], 2, 1).unwrap();
        let (a, b, c) = (
            m.index_of("a").unwrap(),
            m.index_of("b").unwrap(),
            m.index_of("c").unwrap(),
        );
        assert_eq!(m.get(a, b), 1.0);
        assert_eq!(m.get(b, c), 1.0);
        assert_eq!(m.get(a, c), 0.5);
        assert_eq!(m.get(c, a), 0.5);
        assert_eq!(m.get(a, a), 0.0);
    }

    #[test]
    fn single_token_has_no_pairs() {
        let m = build_cooccurrence(&[ts(&["solo"])], 5, 1).unwrap();
        assert_eq!(m.vocab_size(), 1);
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn min_count_can_empty_the_vocabulary() {
        let err = build_cooccurrence(&[ts(&["a", "b", "a"])], 2, 3).unwrap_err();
        assert!(matches!(err, Error::EmptyVocabulary { min_count: 3 }));
    }

    #[test]
    fn rare_words_are_removed_before_windowing() {
        // "x" is dropped, so a and b become adjacent.
        let m = build_cooccurrence(&[ts(&["a", "x", "b"]), ts(&["a", "b"])], 1, 2).unwrap();
        assert_eq!(m.vocab_size(), 2);
        assert_eq!(m.get(0, 1), 2.0);
    }

    proptest! {
        #[test]
        fn matrix_is_symmetric(
            streams in prop::collection::vec(prop::collection::vec(0u8..6, 0..20), 1..5),
            window in 1usize..6,
        ) {
            let streams: Vec<TokenStream> = streams
                .iter()
                .map(|s| TokenStream { tokens: s.iter().map(|i| format!("w{i}")).collect() })
                .collect();
            prop_assume!(streams.iter().any(|s| !s.is_empty()));
            let m = build_cooccurrence(&streams, window, 1).unwrap();
            for &(i, j, x) in &m.entries {
                prop_assert_eq!(m.get(j as usize, i as usize), x);
                prop_assert!(x > 0.0);
            }
        }
    }
}
