use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TokenStream;
use crate::error::{Error, Result};
use crate::evaluation::{variance, welch_t_test};

/// A dictionary word, optionally ending in a `*` prefix wildcard.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub stem: String,
    pub wildcard: bool,
}

impl Pattern {
    pub fn parse(raw: &str) -> Pattern {
        let raw = raw.trim().to_lowercase();
        match raw.strip_suffix('*') {
            Some(stem) => Pattern {
                stem: stem.to_string(),
                wildcard: true,
            },
            None => Pattern {
                stem: raw,
                wildcard: false,
            },
        }
    }

    pub fn matches(&self, token: &str) -> bool {
        if self.wildcard {
            token.starts_with(&self.stem)
        } else {
            token == self.stem
        }
    }
}

/// Named word categories in the `%`-delimited interchange layout:
///
/// ```text
/// %
/// 1	posemo
/// 2	negemo
/// %
/// happ*	1
/// delay*	2
/// ```
///
/// Category ids after a word may be separated by tabs or commas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDictionary {
    pub categories: Vec<(String, Vec<Pattern>)>,
}

impl CategoryDictionary {
    pub fn bundled() -> Self {
        Self::parse(super::DEFAULT_DICTIONARY).expect("bundled dictionary is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn new(categories: Vec<(String, Vec<Pattern>)>) -> Result<Self> {
        let mut names = HashSet::new();
        for (name, patterns) in &categories {
            if !names.insert(name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate category `{name}`")));
            }
            if patterns.is_empty() {
                return Err(Error::InvalidInput(format!("category `{name}` has no patterns")));
            }
        }
        Ok(CategoryDictionary { categories })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::InvalidInput(format!("dictionary line {line}: {msg}"));
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut section = 0;
        let mut ids: BTreeMap<String, usize> = BTreeMap::new();
        let mut categories: Vec<(String, Vec<Pattern>)> = Vec::new();
        for (line_no, line) in lines.by_ref() {
            if line.is_empty() {
                continue;
            }
            if line == "%" {
                section += 1;
                if section == 2 {
                    break;
                }
                continue;
            }
            if section != 1 {
                return Err(bad(line_no, "expected `%` header delimiter".into()));
            }
            let mut parts = line.split_whitespace();
            let (Some(id), Some(name)) = (parts.next(), parts.next()) else {
                return Err(bad(line_no, "header lines are `<id> <name>`".into()));
            };
            if ids.insert(id.to_string(), categories.len()).is_some() {
                return Err(bad(line_no, format!("duplicate category id `{id}`")));
            }
            categories.push((name.to_string(), Vec::new()));
        }
        if section != 2 {
            return Err(Error::InvalidInput("dictionary header is not closed by `%`".into()));
        }
        for (line_no, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(|c: char| c == '\t' || c == ',' || c == ' ');
            let word = parts.next().unwrap_or_default();
            let pattern = Pattern::parse(word);
            let mut any = false;
            for id in parts.filter(|p| !p.is_empty()) {
                let Some(&ci) = ids.get(id) else {
                    return Err(bad(line_no, format!("unknown category id `{id}`")));
                };
                categories[ci].1.push(pattern.clone());
                any = true;
            }
            if !any {
                return Err(bad(line_no, format!("word `{word}` has no category ids")));
            }
        }
        Self::new(categories)
    }

    pub fn names(&self) -> Vec<String> {
        self.categories.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }
}

/// Share of tokens matching each category, in dictionary order.
pub fn category_scores(stream: &TokenStream, dict: &CategoryDictionary) -> Vec<f64> {
    let total = stream.len();
    dict.categories
        .iter()
        .map(|(_, patterns)| {
            if total == 0 {
                return 0.0;
            }
            let hits = stream
                .tokens
                .iter()
                .filter(|t| patterns.iter().any(|p| p.matches(t)))
                .count();
            hits as f64 / total as f64
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CategorySelection {
    /// Indices of categories whose group difference is significant.
    pub selected: Vec<usize>,
    /// Per-category p-values (`None` when the category was skipped).
    pub p_values: Vec<Option<f64>>,
    /// Categories with zero variance in both groups.
    pub skipped: Vec<usize>,
}

/// Two-sample Welch t-test per category; keeps those with `p <= alpha`.
///
/// `group_a` / `group_b` hold one score vector per sample. `alpha` defaults to
/// a Bonferroni-corrected 0.05 over the category count.
pub fn select_significant_categories(
    group_a: &[Vec<f64>],
    group_b: &[Vec<f64>],
    alpha: Option<f64>,
) -> Result<CategorySelection> {
    let n_cat = group_a
        .first()
        .or(group_b.first())
        .map(Vec::len)
        .unwrap_or(0);
    if group_a.len() < 2 || group_b.len() < 2 {
        return Err(Error::InvalidInput(
            "category selection needs at least two samples per group".into(),
        ));
    }
    if group_a.iter().chain(group_b).any(|v| v.len() != n_cat) {
        return Err(Error::InvalidInput("ragged category score vectors".into()));
    }
    let alpha = alpha.unwrap_or(0.05 / n_cat.max(1) as f64);
    let mut out = CategorySelection::default();
    for c in 0..n_cat {
        let a: Vec<f64> = group_a.iter().map(|v| v[c]).collect();
        let b: Vec<f64> = group_b.iter().map(|v| v[c]).collect();
        if variance(&a) == 0.0 && variance(&b) == 0.0 {
            out.skipped.push(c);
            out.p_values.push(None);
            continue;
        }
        let p = welch_t_test(&a, &b)?.p_value;
        out.p_values.push(Some(p));
        if p <= alpha {
            out.selected.push(c);
        }
    }
    Ok(out)
}
