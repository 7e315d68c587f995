//! Tokenization, readability, and dictionary-based category scoring.

mod dictionary;
mod smog;

pub use dictionary::{
    category_scores, select_significant_categories, CategoryDictionary, CategorySelection,
    Pattern,
};
pub use smog::{count_syllables, smog_score, split_sentences};

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");
pub(crate) const DEFAULT_DICTIONARY: &str = include_str!("../../data/open_categories.dic");

/// Lowercased, stop-word-free tokens in source order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<String>,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone, Default)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn empty() -> Self {
        StopWords(HashSet::new())
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        StopWords(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: AsRef<str>>(words: I) -> Self {
        StopWords(words.into_iter().map(|w| w.as_ref().to_lowercase()).collect())
    }
}

/// Optional token normalizer applied after stop-word removal.
pub type Stemmer = fn(&str) -> String;

/// Splits raw text into lowercase word tokens, dropping punctuation and stop
/// words.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    stopwords: StopWords,
    stemmer: Option<Stemmer>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::new(StopWords::english())
    }
}

impl Tokenizer {
    pub fn new(stopwords: StopWords) -> Self {
        Tokenizer {
            stopwords,
            stemmer: None,
        }
    }

    pub fn with_stemmer(mut self, stemmer: Stemmer) -> Self {
        self.stemmer = Some(stemmer);
        self
    }

    pub fn tokenize(&self, text: &str) -> TokenStream {
        let mut tokens = Vec::new();
        for raw in text.split(|c: char| !(c.is_alphanumeric() || c == '\'')) {
            let word = raw.trim_matches('\'');
            if word.is_empty() || !word.chars().any(char::is_alphanumeric) {
                continue;
            }
            let word = word.to_lowercase();
            if self.stopwords.contains(&word) {
                continue;
            }
            tokens.push(match self.stemmer {
                Some(stem) => stem(&word),
                None => word,
            });
        }
        TokenStream { tokens }
    }
}

/// Convenience wrapper over [`Tokenizer::tokenize`].
pub fn tokenize(text: &str, stopwords: &StopWords) -> TokenStream {
    Tokenizer::new(stopwords.clone()).tokenize(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spec_examples() {
        let sw = StopWords::from_words(["you"]);
        assert_eq!(tokenize("Thank you!!", &sw).tokens, vec!["thank"]);
        assert!(tokenize("", &sw).is_empty());
        assert_eq!(
            tokenize("Print, sign & SHIP", &StopWords::empty()).tokens,
            vec!["print", "sign", "ship"]
        );
    }

    #[test]
    fn keeps_inner_apostrophes() {
        let t = tokenize("'Don't' panic...", &StopWords::empty());
        assert_eq!(t.tokens, vec!["don't", "panic"]);
    }

    #[test]
    fn stemmer_hook_applies() {
        fn chop(w: &str) -> String {
            w.trim_end_matches('s').to_string()
        }
        let t = Tokenizer::new(StopWords::empty()).with_stemmer(chop).tokenize("books games");
        assert_eq!(t.tokens, vec!["book", "game"]);
    }

    #[test]
    fn default_list_loads() {
        let sw = StopWords::english();
        assert!(sw.contains("the"));
        assert!(!sw.contains("ship"));
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(text in "[a-zA-Z ,.!?'&-]{0,80}") {
            let tk = Tokenizer::default();
            let once = tk.tokenize(&text);
            let twice = tk.tokenize(&once.join());
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn tokens_are_lowercase_and_never_stopwords(text in "[a-zA-Z ,.!?]{0,80}") {
            let sw = StopWords::english();
            for t in tokenize(&text, &sw).tokens {
                prop_assert_eq!(t.to_lowercase(), t.clone());
                prop_assert!(!sw.contains(&t));
                prop_assert!(t.chars().any(char::is_alphanumeric));
            }
        }
    }
}
