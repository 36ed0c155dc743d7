use crate::modelkit::tokenize::{split_tokens_at, Token};

const ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.", "vs.", "e.g.", "i.e.", "etc.",
    "inc.", "ltd.", "co.", "no.", "fig.", "cf.", "approx.", "gen.", "gov.", "lt.", "col.",
    "mt.", "sgt.", "capt.", "rev.", "hon.",
];

const CLOSERS: &[char] = &['"', '\'', '\u{201d}', '\u{2019}', ')', ']'];
const OPENERS: &[char] = &['"', '\'', '\u{201c}', '\u{2018}', '(', '['];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    /// Byte span into the document; spans of consecutive sentences tile the
    /// document.
    pub start: usize,
    pub end: usize,
}

impl Sentence {
    pub fn words(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }
}

fn is_abbreviation(text: &str, chunk_start: usize, term_end: usize) -> bool {
    let chunk = text[chunk_start..term_end].trim_start_matches(OPENERS).to_lowercase();
    ABBREVIATIONS.contains(&chunk.as_str())
}

/// Splits a document into sentences at `.`, `!` or `?` (optionally followed
/// by closing quotes/brackets) that precede whitespace or end of text.
pub fn segment(text: &str) -> Vec<Sentence> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut bounds = Vec::new();
    let mut sent_start = 0usize;
    let mut chunk_start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, ch) = chars[i];
        if ch.is_whitespace() {
            chunk_start = pos + ch.len_utf8();
            i += 1;
            continue;
        }
        if !matches!(ch, '.' | '!' | '?') {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?') {
            j += 1;
        }
        let term_end = chars.get(j).map_or(text.len(), |c| c.0);
        while j < chars.len() && CLOSERS.contains(&chars[j].1) {
            j += 1;
        }
        let at_boundary = j == chars.len() || chars[j].1.is_whitespace();
        if !at_boundary || (ch == '.' && j == i + 1 && is_abbreviation(text, chunk_start, term_end))
        {
            i = j;
            continue;
        }
        while j < chars.len() && chars[j].1.is_whitespace() {
            j += 1;
        }
        let end = chars.get(j).map_or(text.len(), |c| c.0);
        bounds.push((sent_start, end));
        sent_start = end;
        chunk_start = end;
        i = j;
    }
    if sent_start < text.len() {
        if text[sent_start..].trim().is_empty() {
            if let Some(last) = bounds.last_mut() {
                last.1 = text.len();
            }
        } else {
            bounds.push((sent_start, text.len()));
        }
    }
    bounds
        .into_iter()
        .map(|(start, end)| Sentence {
            tokens: split_tokens_at(&text[start..end], start),
            start,
            end,
        })
        .collect()
}
