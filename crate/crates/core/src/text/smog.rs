use crate::error::{Error, Result};

/// Sentences are maximal runs of text between `.`, `!` or `?` characters that
/// contain at least one word.
pub fn split_sentences(text: &str) -> Vec<&str> {
    text.split(['.', '!', '?'])
        .filter(|s| s.chars().any(char::is_alphanumeric))
        .collect()
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group syllable heuristic.
///
/// Counts maximal runs of `aeiouy`, drops one for a silent trailing `e`
/// (a consonant followed by `le` is kept as syllabic), and never returns less
/// than one for a word containing letters.
pub fn count_syllables(word: &str) -> usize {
    let w: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    if w.is_empty() {
        return 0;
    }
    let mut groups = 0;
    let mut prev_vowel = false;
    for &c in &w {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let n = w.len();
    if n >= 2 && w[n - 1] == 'e' && !is_vowel(w[n - 2]) {
        let syllabic_le = n >= 3 && w[n - 2] == 'l' && !is_vowel(w[n - 3]);
        if !syllabic_le {
            groups -= 1;
        }
    }
    groups.max(1)
}

/// SMOG grade: `1.0430 * sqrt(polysyllables * 30 / sentences) + 3.1291`.
///
/// Fails on text with no sentence; callers record a missing value instead.
pub fn smog_score(text: &str) -> Result<f64> {
    let sentences = split_sentences(text);
    if sentences.is_empty() {
        return Err(Error::InvalidInput(
            "SMOG score is undefined for text without sentences".into(),
        ));
    }
    let polysyllables = text
        .split(|c: char| !c.is_alphabetic())
        .filter(|w| !w.is_empty() && count_syllables(w) >= 3)
        .count();
    Ok(1.0430 * (polysyllables as f64 * 30.0 / sentences.len() as f64).sqrt() + 3.1291)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn syllable_heuristic() {
        assert_eq!(count_syllables("cat"), 1);
        assert_eq!(count_syllables("make"), 1);
        assert_eq!(count_syllables("the"), 1);
        assert_eq!(count_syllables("table"), 2);
        assert_eq!(count_syllables("beautiful"), 3);
        assert_eq!(count_syllables("production"), 3);
        assert_eq!(count_syllables("manufacturing"), 5);
        assert_eq!(count_syllables("rhythm"), 1);
    }

    #[test]
    fn thirty_sentences_thirty_polysyllables() {
        let text = "The production went well. ".repeat(30);
        let expected = 1.0430 * 30f64.sqrt() + 3.1291;
        let got = smog_score(&text).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 8.842).abs() < 1e-3);
    }

    #[test]
    fn no_polysyllables_gives_intercept() {
        assert_eq!(smog_score("I like cats. Dogs are fun!").unwrap(), 3.1291);
    }

    #[test]
    fn empty_text_is_an_error() {
        assert!(smog_score("").is_err());
        assert!(smog_score("?!...").is_err());
    }

    proptest! {
        #[test]
        fn invariant_under_sentence_reordering(
            sentences in prop::collection::vec("[a-z]{1,12}( [a-z]{1,12}){0,6}", 1..8),
            seed in any::<u64>()
        ) {
            let forward: String = sentences.iter().map(|s| format!("{s}. ")).collect();
            let mut shuffled = sentences.clone();
            let k = shuffled.len();
            shuffled.rotate_left((seed as usize) % k);
            shuffled.reverse();
            let backward: String = shuffled.iter().map(|s| format!("{s}! ")).collect();
            prop_assert_eq!(smog_score(&forward).unwrap(), smog_score(&backward).unwrap());
        }
    }
}
