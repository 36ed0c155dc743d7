//! Word-level tokenization shared by the miner, the vocabulary and the
//! retriever.
//!
//! Runs of alphanumeric characters form one token; every other
//! non-whitespace character is a token of its own. Original casing is kept
//! on [`Token`]; lowercasing happens at lookup time.

use std::ops::Range;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// Byte offsets into the source string.
    pub span: Range<usize>,
}

impl Token {
    pub fn lower(&self) -> String {
        self.text.to_lowercase()
    }
}

pub fn split_tokens(text: &str) -> Vec<Token> {
    split_tokens_at(text, 0)
}

/// Like [`split_tokens`] but with spans shifted by `base`.
pub fn split_tokens_at(text: &str, base: usize) -> Vec<Token> {
    let mut out = Vec::new();
    let mut word_start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if word_start.is_none() {
                word_start = Some(i);
            }
            continue;
        }
        if let Some(s) = word_start.take() {
            out.push(Token {
                text: text[s..i].to_string(),
                span: base + s..base + i,
            });
        }
        if !ch.is_whitespace() {
            let end = i + ch.len_utf8();
            out.push(Token {
                text: text[i..end].to_string(),
                span: base + i..base + end,
            });
        }
    }
    if let Some(s) = word_start {
        out.push(Token {
            text: text[s..].to_string(),
            span: base + s..base + text.len(),
        });
    }
    out
}

/// Lowercased token strings.
pub fn words(text: &str) -> Vec<String> {
    split_tokens(text).iter().map(Token::lower).collect()
}

pub fn is_punct(token: &str) -> bool {
    !token.is_empty() && !token.chars().any(char::is_alphanumeric)
}

pub fn is_terminator(token: &str) -> bool {
    matches!(token, "." | "!" | "?")
}

/// Joins tokens with single spaces.
pub fn render<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_ref());
    }
    out
}
