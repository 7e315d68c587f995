//! Word vectors: co-occurrence counting, GloVe-style training, and the
//! plain-text vector format.

mod cooc;
mod glove;

pub use cooc::{build_cooccurrence, CoocMatrix};
pub use glove::{train_embeddings, GloveFit, GloveParams};

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::text::{TokenStream, Tokenizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedParams {
    pub window: usize,
    pub min_count: usize,
    pub glove: GloveParams,
}

impl Default for EmbedParams {
    fn default() -> Self {
        EmbedParams {
            window: 15,
            min_count: 5,
            glove: GloveParams::default(),
        }
    }
}

/// One token stream per reward description, in corpus order.
pub fn reward_streams(corpus: &Corpus, tokenizer: &Tokenizer) -> Vec<TokenStream> {
    corpus
        .projects
        .iter()
        .flat_map(|p| &p.rewards)
        .map(|r| tokenizer.tokenize(&r.description))
        .collect()
}

/// Trains word vectors on the corpus's reward descriptions.
pub fn embed_rewards(corpus: &Corpus, tokenizer: &Tokenizer, params: &EmbedParams, seed: u64) -> Result<GloveFit> {
    let cooc = build_cooccurrence(&reward_streams(corpus, tokenizer), params.window, params.min_count)?;
    train_embeddings(&cooc, &params.glove, seed)
}

/// Dense `|V| × dim` word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    words: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    vectors: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(words: Vec<String>, dim: usize, vectors: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dimension must be positive".into()));
        }
        if vectors.len() != words.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: words.len() * dim,
                actual: vectors.len(),
            });
        }
        if vectors.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("embedding contains a non-finite value".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate embedding word `{w}`")));
            }
        }
        Ok(EmbeddingTable {
            words,
            index,
            dim,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.row(i))
    }

    /// All rows as owned vectors, in table order.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.row(i).to_vec()).collect()
    }

    /// Vector text format: `<vocab_size> <dim>` then `word v1 .. vdim` lines.
    /// Values use the shortest representation that parses back exactly.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.dim);
        for (i, w) in self.words.iter().enumerate() {
            out.push_str(w);
            for x in self.row(i) {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the vector text format. Leading `#` lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::Malformed {
            path: "<embeddings>".into(),
            line,
            field: "vector".into(),
            message: msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end()))
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty embedding file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(hline, format!("header must be `<vocab_size> <dim>`: {e}")))?;
        let [n, dim] = dims[..] else {
            return Err(bad(hline, "header must be `<vocab_size> <dim>`".into()));
        };
        let mut words = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n * dim);
        for (line, raw) in lines {
            let mut parts = raw.split_whitespace();
            let word = parts.next().unwrap_or_default().to_string();
            let values: Vec<&str> = parts.collect();
            if values.len() != dim {
                return Err(bad(line, format!("ragged row: expected {dim} values, found {}", values.len())));
            }
            for v in values {
                let x: f64 = v.parse().map_err(|_| bad(line, format!("non-numeric value `{v}`")))?;
                vectors.push(x);
            }
            words.push(word);
        }
        if words.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: words.len(),
            });
        }
        Self::new(words, dim, vectors)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Malformed {
                line,
                field,
                message,
                ..
            } => Error::Malformed {
                path: path.display().to_string(),
                line,
                field,
                message,
            },
            other => other,
        })
    }
}

/// Loads a table from the vector text format.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    EmbeddingTable::load(path)
}
