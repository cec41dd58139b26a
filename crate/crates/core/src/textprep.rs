//! Sentence tokenization and vocabulary resolution.

use std::sync::LazyLock;

use regex::Regex;

use crate::embed::EmbeddingSpace;

static EDGE_PUNCT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\p{P}+|\p{P}+$").expect("valid regex"));

/// Splits on unicode whitespace and strips punctuation from both ends of each
/// piece. Case is preserved; internal punctuation ("don't") is kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|piece| EDGE_PUNCT.replace_all(piece, ""))
        .filter(|t| !t.is_empty())
        .map(|t| t.into_owned())
        .collect()
}

/// A sentence reduced to its in-vocabulary tokens.
///
/// Tokens keep their order and multiplicity. Anything the space could not
/// resolve is only counted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenBag {
    tokens: Vec<String>,
    rows: Vec<usize>,
    oov_count: usize,
    source_text: String,
}

impl TokenBag {
    pub fn new(text: &str, space: &EmbeddingSpace) -> Self {
        let mut tokens = Vec::new();
        let mut rows = Vec::new();
        let mut oov_count = 0;
        for token in tokenize(text) {
            match space.index_of(&token) {
                Some(row) => {
                    tokens.push(token);
                    rows.push(row);
                }
                None => oov_count += 1,
            }
        }
        TokenBag {
            tokens,
            rows,
            oov_count,
            source_text: text.to_string(),
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Row indices of the tokens in the space the bag was built against.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn oov_count(&self) -> usize {
        self.oov_count
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Reorders the tokens. `order` must be a permutation of `0..len()`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.len(), "permutation length mismatch");
        TokenBag {
            tokens: order.iter().map(|&i| self.tokens[i].clone()).collect(),
            rows: order.iter().map(|&i| self.rows[i]).collect(),
            oov_count: self.oov_count,
            source_text: self.source_text.clone(),
        }
    }
}

pub fn to_token_bag(text: &str, space: &EmbeddingSpace) -> TokenBag {
    TokenBag::new(text, space)
}
