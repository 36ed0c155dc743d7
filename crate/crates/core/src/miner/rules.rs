//! Statement span extraction and false-positive filters.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::lexicon::{IndicatorClass, IndicatorMatch};
use crate::modelkit::tokenize::{is_terminator, Token};

const MONTHS: &[&str] = &[
    "january", "february", "march", "april", "may", "june", "july", "august", "september",
    "october", "november", "december",
];

const TIME_INDICATORS: &[&str] = &["since", "due to", "because of"];

const DEGREE_WORDS: &[&str] = &[
    "happy", "sad", "much", "many", "little", "few", "good", "bad", "big", "small", "long",
    "far", "very", "tired", "angry", "excited", "beautiful", "hard", "easy", "fast", "slow",
    "late", "early", "great", "well", "sorry", "glad", "afraid", "sure", "hot", "cold",
    "important", "different", "close", "strong", "busy", "simple", "nice", "cute", "funny",
    "strange", "weird", "quiet", "loud", "bright", "dark", "proud", "scared", "stupid", "smart",
    "young", "old", "high", "low", "deep", "full", "tall", "rich", "poor", "often", "hungry",
    "cool", "warm", "lucky", "pretty", "bored", "upset", "worried", "large", "huge", "kind",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    EmptyStatement,
    TimePoint,
    DegreeAdverb,
    TooShort,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::EmptyStatement => "empty-statement",
            RejectReason::TimePoint => "time-point",
            RejectReason::DegreeAdverb => "degree-adverb",
            RejectReason::TooShort => "too-short",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Accept(Range<usize>),
    Reject(RejectReason),
}

impl Decision {
    pub fn is_accept(&self) -> bool {
        matches!(self, Decision::Accept(_))
    }
}

/// Token span of the statement governed by `m`.
///
/// Commas directly after the indicator stay with the indicator. Conclusion
/// statements run to the sentence end, premise statements stop at the next
/// comma. Trailing terminators are excluded.
pub fn extract_statement_span(
    tokens: &[Token],
    m: &IndicatorMatch,
) -> Result<Range<usize>, RejectReason> {
    let mut begin = m.end.min(tokens.len());
    while begin < tokens.len() && tokens[begin].text == "," {
        begin += 1;
    }
    let mut end = match m.class {
        IndicatorClass::Conclusion => tokens.len(),
        IndicatorClass::Premise => tokens[begin..]
            .iter()
            .position(|t| t.text == ",")
            .map_or(tokens.len(), |p| begin + p),
    };
    while end > begin && is_terminator(&tokens[end - 1].text) {
        end -= 1;
    }
    if end <= begin {
        return Err(RejectReason::EmptyStatement);
    }
    Ok(begin..end)
}

fn is_time_point(tokens: &[Token], at: usize) -> bool {
    let next = tokens[at].lower();
    if next.len() == 4 && next.chars().all(|c| c.is_ascii_digit()) {
        return true;
    }
    if next == "may" {
        // modal "may" unless a day or year follows
        return tokens
            .get(at + 1)
            .is_some_and(|t| t.text.chars().all(|c| c.is_ascii_digit()));
    }
    MONTHS.contains(&next.as_str())
}

fn is_degree(tokens: &[Token], at: usize) -> bool {
    let next = tokens[at].lower();
    DEGREE_WORDS.contains(&next.as_str()) || (next.len() > 2 && next.ends_with("ly"))
}

/// Accepts or rejects an indicator occurrence as a statement source.
pub fn validate_statement(tokens: &[Token], m: &IndicatorMatch, min_tokens: usize) -> Decision {
    let span = match extract_statement_span(tokens, m) {
        Ok(s) => s,
        Err(r) => return Decision::Reject(r),
    };
    let surface = m.surface_text();
    if TIME_INDICATORS.contains(&surface.as_str()) && is_time_point(tokens, span.start) {
        return Decision::Reject(RejectReason::TimePoint);
    }
    if surface == "so" && is_degree(tokens, span.start) {
        return Decision::Reject(RejectReason::DegreeAdverb);
    }
    if span.len() < min_tokens {
        return Decision::Reject(RejectReason::TooShort);
    }
    Decision::Accept(span)
}
