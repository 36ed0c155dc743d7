//! Entailment scoring used to relabel pseudo-statements.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::modelkit::tokenize::is_punct;

/// Directional entailment scorer `F(a, b)` in `[0, 1]`.
pub trait EntailmentOracle: Sync {
    fn score(&self, premise: &[String], hypothesis: &[String]) -> f64;
}

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "is", "are", "was", "were", "be", "been", "of", "to", "in", "on", "and",
    "or", "it", "that", "this", "as", "at", "by", "for", "with", "</s>", "<unk>",
];

/// Lexical coverage: `|content(a) ∩ content(b)| / |content(b)|`.
///
/// Content tokens are lowercased, with punctuation and stopwords removed.
/// When `b` has no content tokens the raw token sets are compared instead.
#[derive(Debug, Clone)]
pub struct LexicalOracle {
    stopwords: HashSet<String>,
}

impl Default for LexicalOracle {
    fn default() -> Self {
        Self::with_stopwords(STOPWORDS.iter().copied())
    }
}

impl LexicalOracle {
    pub fn with_stopwords<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            stopwords: words.into_iter().map(str::to_string).collect(),
        }
    }

    fn content(&self, tokens: &[String]) -> HashSet<String> {
        tokens
            .iter()
            .map(|t| t.to_lowercase())
            .filter(|t| !is_punct(t) && !self.stopwords.contains(t))
            .collect()
    }
}

impl EntailmentOracle for LexicalOracle {
    fn score(&self, a: &[String], b: &[String]) -> f64 {
        let (mut ca, mut cb) = (self.content(a), self.content(b));
        if cb.is_empty() {
            ca = a.iter().map(|t| t.to_lowercase()).collect();
            cb = b.iter().map(|t| t.to_lowercase()).collect();
            if cb.is_empty() {
                return 0.0;
            }
        }
        ca.intersection(&cb).count() as f64 / cb.len() as f64
    }
}

/// `e(s+, s-) = max(F(s+, s-), F(s-, s+))`.
pub fn entail_score(
    oracle: &dyn EntailmentOracle,
    gold: &[String],
    pseudo: &[String],
) -> Result<f64> {
    if gold.is_empty() || pseudo.is_empty() {
        return Err(Error::Invalid("entailment needs two non-empty statements".into()));
    }
    Ok(oracle.score(gold, pseudo).max(oracle.score(pseudo, gold)))
}
